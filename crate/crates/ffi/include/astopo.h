#ifndef ASTOPO_H
#define ASTOPO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Selects the NL end point for [`astopo_replay_finish`].
#define ASTOPO_NL_VISIBLE_END 0

#define ASTOPO_NL_LAST_ANNOUNCE 1

typedef enum AstopoStatus {
  ASTOPO_STATUS_OK = 0,
  ASTOPO_STATUS_NULL_POINTER = 1,
  ASTOPO_STATUS_INVALID_UTF8 = 2,
  ASTOPO_STATUS_PARSE = 3,
  ASTOPO_STATUS_IO = 4,
  ASTOPO_STATUS_INVALID_ARGUMENT = 5,
  ASTOPO_STATUS_NO_FIT = 6,
  ASTOPO_STATUS_NOT_FOUND = 7,
  ASTOPO_STATUS_PANIC = 8,
} AstopoStatus;

typedef struct AstopoGraph AstopoGraph;

// Streaming replay of canonical text update lines.
typedef struct AstopoReplay AstopoReplay;

// Per-link NP/NL results, sorted by link.
typedef struct AstopoStats AstopoStats;

typedef struct AstopoLinkStats {
  uint32_t lo;
  uint32_t hi;
  uint64_t first_seen;
  double np;
  double nl;
} AstopoLinkStats;

typedef struct AstopoFit {
  double slope;
  double intercept;
  double pearson_r;
  size_t points_used;
} AstopoFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *astopo_version(void);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call on this thread.
const char *astopo_last_error(void);

// Canonical `(lo, hi)` order for an AS adjacency.
//
// # Safety
// `lo` and `hi` must be valid for writes.
enum AstopoStatus astopo_link_normalize(uint32_t a, uint32_t b, uint32_t *lo, uint32_t *hi);

struct AstopoReplay *astopo_replay_new(void);

// # Safety
// `r` must come from [`astopo_replay_new`] and not be used afterwards.
void astopo_replay_free(struct AstopoReplay *r);

// Applies one `ts|peer_as|peer_ip|A|prefix|path` or `...|W|prefix` line.
// Blank lines are accepted and ignored.
//
// # Safety
// `r` must be a live replay handle and `line` a NUL-terminated string.
enum AstopoStatus astopo_replay_push_line(struct AstopoReplay *r, const char *line);

// Closes all intervals at `t_end` and returns per-link statistics. The
// replay handle is reset to an empty state.
//
// # Safety
// `r` must be a live replay handle and `out` valid for writes.
enum AstopoStatus astopo_replay_finish(struct AstopoReplay *r,
                                       uint64_t t_end,
                                       uint32_t nl_mode,
                                       struct AstopoStats **out);

// # Safety
// `s` must be null or a live stats handle.
size_t astopo_stats_len(const struct AstopoStats *s);

// # Safety
// `s` must be a live stats handle and `out` valid for writes.
enum AstopoStatus astopo_stats_get(const struct AstopoStats *s,
                                   size_t i,
                                   struct AstopoLinkStats *out);

// # Safety
// `s` must come from [`astopo_replay_finish`] and not be used afterwards.
void astopo_stats_free(struct AstopoStats *s);

struct AstopoGraph *astopo_graph_new(void);

// # Safety
// `g` must come from [`astopo_graph_new`] and not be used afterwards.
void astopo_graph_free(struct AstopoGraph *g);

// Adds an edge; duplicates keep the earlier `first_seen`.
//
// # Safety
// `g` must be a live graph handle.
enum AstopoStatus astopo_graph_add_link(struct AstopoGraph *g,
                                        uint32_t a,
                                        uint32_t b,
                                        uint64_t first_seen);

// Adds every edge of a `lo hi [first_seen]` edge-list file.
//
// # Safety
// `g` must be a live graph handle and `path` a NUL-terminated string.
enum AstopoStatus astopo_graph_read_edge_list(struct AstopoGraph *g, const char *path);

// # Safety
// `g` must be null or a live graph handle.
size_t astopo_graph_node_count(const struct AstopoGraph *g);

// # Safety
// `g` must be null or a live graph handle.
size_t astopo_graph_edge_count(const struct AstopoGraph *g);

// Power-law fit of the degree CCDF.
//
// # Safety
// `g` must be a live graph handle and `out` valid for writes.
enum AstopoStatus astopo_graph_fit(const struct AstopoGraph *g, struct AstopoFit *out);

// Edge betweenness of `(a, b)`. Computed for the whole graph on first use
// and cached until the graph changes.
//
// # Safety
// `g` must be a live graph handle and `out` valid for writes.
enum AstopoStatus astopo_graph_betweenness(struct AstopoGraph *g,
                                           uint32_t a,
                                           uint32_t b,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASTOPO_H */
