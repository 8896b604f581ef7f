#include <stdio.h>
#include "colorchain.h"

int main(void) {
    CcGraph *g = NULL;
    CcChain *chain = NULL;
    uint32_t colors[6];
    if (cc_graph_from_spec("path:6", &g) != CC_STATUS_OK) return 1;
    if (cc_chain_new(g, 3, 42, &chain) != CC_STATUS_OK) return 2;
    if (cc_chain_glauber(chain, 500) != CC_STATUS_OK) return 3;
    if (cc_chain_coloring(chain, colors, 6) != CC_STATUS_OK) return 4;
    for (int v = 0; v + 1 < 6; v++) {
        if (colors[v] == colors[v + 1]) return 5;
    }
    if (cc_graph_from_spec("bogus:1", &g) == CC_STATUS_OK) return 6;
    printf("%s\n", cc_last_error());
    cc_chain_free(chain);
    cc_graph_free(g);
    return 0;
}
