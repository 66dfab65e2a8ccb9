#ifndef SFSTREE_H
#define SFSTREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SfsMode {
  SFS_MODE_UNCONSTRAINED = 0,
  SFS_MODE_TEST_TIME_CONSTRAINT = 1,
  SFS_MODE_SFS = 2,
} SfsMode;

/**
 * Result code of every call.
 */
typedef enum SfsStatus {
  SFS_STATUS_OK = 0,
  SFS_STATUS_NULL_POINTER = 1,
  SFS_STATUS_INVALID_ARGUMENT = 2,
  SFS_STATUS_INVALID_GRAPH = 3,
  SFS_STATUS_IO = 4,
  SFS_STATUS_PARSE = 5,
  SFS_STATUS_CHECKPOINT = 6,
  SFS_STATUS_BUFFER_TOO_SMALL = 7,
  SFS_STATUS_PANIC = 8,
} SfsStatus;

/**
 * Opaque graph handle.
 */
typedef struct SfsGraph SfsGraph;

/**
 * Opaque trained predictor handle.
 */
typedef struct SfsPredictor SfsPredictor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 *
 * The pointer stays valid until the next call on the same thread.
 */
const char *sfs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sfs_version(void);

/**
 * Number of node pairs for `n` nodes, `n (n - 1) / 2`.
 */
size_t sfs_pair_count(size_t n);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sfs_string_free(char *s);

/**
 * Parses a graph from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SfsStatus sfs_graph_from_json(const char *json, struct SfsGraph **out);

/**
 * Builds a graph from coordinates and an edge list of index pairs.
 *
 * # Safety
 * `xy` holds `2 * node_count` doubles and `edges` `2 * edge_count` indices.
 */
enum SfsStatus sfs_graph_new(uint32_t width,
                             uint32_t height,
                             const double *xy,
                             size_t node_count,
                             const size_t *edges,
                             size_t edge_count,
                             struct SfsGraph **out);

/**
 * Loads a graph JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SfsStatus sfs_graph_load(const char *path, struct SfsGraph **out);

/**
 * Serialises a graph to JSON; free the result with [`sfs_string_free`].
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum SfsStatus sfs_graph_to_json(const struct SfsGraph *g, char **out);

/**
 * Releases a graph handle. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not have been freed.
 */
void sfs_graph_free(struct SfsGraph *g);

/**
 * Node and edge counts.
 *
 * # Safety
 * `g` must be a live handle; outputs must be writable.
 */
enum SfsStatus sfs_graph_counts(const struct SfsGraph *g, size_t *nodes, size_t *edges);

/**
 * Whether the graph is connected and acyclic.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum SfsStatus sfs_graph_is_tree(const struct SfsGraph *g, bool *out);

/**
 * Projects thresholded edge probabilities onto their minimum spanning tree.
 *
 * `edge_prob` holds one edge-existence probability per pair. The `n - 1`
 * tree edges are written to `tree_edges` as index pairs, which must have
 * room for `2 * (n - 1)` entries. Counts of added and removed pairs go to
 * `added` and `removed`.
 *
 * # Safety
 * Buffers must have the documented lengths; outputs must be writable.
 */
enum SfsStatus sfs_mst_project(size_t n,
                               const double *edge_prob,
                               size_t *tree_edges,
                               size_t tree_capacity,
                               size_t *added,
                               size_t *removed);

/**
 * Suppression forward pass: constrained probabilities for raw logits.
 *
 * # Safety
 * `logits` and `constrained` hold `2 * sfs_pair_count(n)` doubles.
 */
enum SfsStatus sfs_forward(size_t n, const double *logits, double lambda, double *constrained);

/**
 * Combined edge loss and its gradient w.r.t. the logits.
 *
 * `targets` holds one byte per pair, nonzero for ground-truth edges.
 *
 * # Safety
 * `logits` and `grad` hold `2 * sfs_pair_count(n)` doubles, `targets`
 * `sfs_pair_count(n)` bytes; `loss` must be writable.
 */
enum SfsStatus sfs_backward(size_t n,
                            const double *logits,
                            const uint8_t *targets,
                            double lambda,
                            double *grad,
                            double *loss);

/**
 * SMD between two graphs with `m` points each; `sentinel` reports the empty-graph fallback.
 *
 * # Safety
 * Handles must be live; outputs must be writable.
 */
enum SfsStatus sfs_smd(const struct SfsGraph *pred,
                       const struct SfsGraph *gt,
                       size_t m,
                       double *out,
                       bool *sentinel);

/**
 * Keypoint precision, recall and F1.
 *
 * # Safety
 * Handles must be live; outputs must be writable.
 */
enum SfsStatus sfs_topo(const struct SfsGraph *pred,
                        const struct SfsGraph *gt,
                        double radius,
                        double angle_tol_deg,
                        double *precision,
                        double *recall,
                        double *f1);

/**
 * Loads a predictor checkpoint, checking its architecture.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SfsStatus sfs_predictor_load(const char *path, struct SfsPredictor **out);

/**
 * Releases a predictor handle. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not have been freed.
 */
void sfs_predictor_free(struct SfsPredictor *p);

/**
 * Predicts edges among `node_count` nodes on an 8-bit grayscale image.
 *
 * `mode` is one of the [`SfsMode`] values.
 *
 * # Safety
 * `pixels` holds `width * height` row-major bytes, `xy` `2 * node_count`
 * doubles; `p` must be live and `out` writable.
 */
enum SfsStatus sfs_predictor_infer(const struct SfsPredictor *p,
                                   const uint8_t *pixels,
                                   uint32_t width,
                                   uint32_t height,
                                   const double *xy,
                                   size_t node_count,
                                   uint32_t mode,
                                   struct SfsGraph **out);

/**
 * One rewriting step of an L-system sequence; free the result with [`sfs_string_free`].
 *
 * `rule` is either a production for `A` such as `F[-A]` or a full
 * `F->F; A->F[-A]` rule.
 *
 * # Safety
 * Inputs must be NUL-terminated strings; `out` must be writable.
 */
enum SfsStatus sfs_lsystem_rewrite(const char *seq, const char *rule, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFSTREE_H */
