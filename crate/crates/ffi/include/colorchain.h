#ifndef COLORCHAIN_H
#define COLORCHAIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_ARGUMENT = 2,
  CC_STATUS_PARSE = 3,
  CC_STATUS_NO_SPECTRAL_GAP = 4,
  CC_STATUS_NO_CONVERGENCE = 5,
  CC_STATUS_LEVEL_EXPANSION = 6,
  CC_STATUS_IMPROPER_COLORING = 7,
  CC_STATUS_BUDGET_EXCEEDED = 8,
  CC_STATUS_IO = 9,
  CC_STATUS_INTERNAL = 10,
} CcStatus;

typedef struct CcChain CcChain;

typedef struct CcGraph CcGraph;

typedef struct CcPartition CcPartition;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread, or "" after a
 * success. The pointer stays valid until the next `cc_*` call.
 */
const char *cc_last_error(void);

/**
 * Builds a graph from a generator spec such as `grid:3:3` or `tri:50:7`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CcStatus cc_graph_from_spec(const char *spec, struct CcGraph **out);

/**
 * Parses the whitespace-separated edge-list format.
 *
 * # Safety
 * `edges` must be a NUL-terminated string and `out` a writable pointer.
 */
enum CcStatus cc_graph_from_edge_list(const char *edges, struct CcGraph **out);

/**
 * # Safety
 * `graph` must be null or a live handle; it is invalid afterwards.
 */
void cc_graph_free(struct CcGraph *graph);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t cc_graph_vertex_count(const struct CcGraph *graph);

/**
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t cc_graph_edge_count(const struct CcGraph *graph);

/**
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t cc_graph_max_degree(const struct CcGraph *graph);

/**
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t cc_graph_degeneracy(const struct CcGraph *graph);

/**
 * Level sets from the perturbed Perron vector. A non-positive `epsilon`
 * selects it from the spectral gap.
 *
 * # Safety
 * `graph` must be a live handle and `out` a writable pointer.
 */
enum CcStatus cc_partition_new(const struct CcGraph *graph,
                               double epsilon,
                               uint64_t seed,
                               struct CcPartition **out);

/**
 * # Safety
 * `partition` must be null or a live handle; it is invalid afterwards.
 */
void cc_partition_free(struct CcPartition *partition);

/**
 * Number of levels, or 0 for a null handle.
 *
 * # Safety
 * `partition` must be null or a live handle.
 */
size_t cc_partition_level_count(const struct CcPartition *partition);

/**
 * # Safety
 * `partition` must be null or a live handle.
 */
double cc_partition_epsilon(const struct CcPartition *partition);

/**
 * Writes the level of every vertex into `levels[0..len]`; `len` must equal
 * the vertex count.
 *
 * # Safety
 * `partition` must be a live handle and `levels` must hold `len` entries.
 */
enum CcStatus cc_partition_levels(const struct CcPartition *partition, size_t *levels, size_t len);

/**
 * A chain over `k`-colorings started from the greedy degeneracy coloring.
 * The chain keeps its own copy of the graph.
 *
 * # Safety
 * `graph` must be a live handle and `out` a writable pointer.
 */
enum CcStatus cc_chain_new(const struct CcGraph *graph,
                           uint32_t k,
                           uint64_t seed,
                           struct CcChain **out);

/**
 * # Safety
 * `chain` must be null or a live handle; it is invalid afterwards.
 */
void cc_chain_free(struct CcChain *chain);

/**
 * Runs `steps` single-site heat-bath updates.
 *
 * # Safety
 * `chain` must be a live handle.
 */
enum CcStatus cc_chain_glauber(struct CcChain *chain, uint64_t steps);

/**
 * Runs `rounds` rounds of level-set dynamics with random level choice.
 *
 * # Safety
 * `chain` and `partition` must be live handles.
 */
enum CcStatus cc_chain_set_dynamics(struct CcChain *chain,
                                    const struct CcPartition *partition,
                                    uint64_t rounds);

/**
 * Copies the current coloring (colors 1..=k) into `colors[0..len]`; `len`
 * must equal the vertex count.
 *
 * # Safety
 * `chain` must be a live handle and `colors` must hold `len` entries.
 */
enum CcStatus cc_chain_coloring(const struct CcChain *chain, uint32_t *colors, size_t len);

/**
 * Counts proper `k`-colorings by exhaustive enumeration (bounded budget).
 *
 * # Safety
 * `graph` must be a live handle and `count` a writable pointer.
 */
enum CcStatus cc_count_colorings(const struct CcGraph *graph, uint32_t k, uint64_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLORCHAIN_H */
