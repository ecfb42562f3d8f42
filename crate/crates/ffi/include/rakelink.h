#ifndef RAKELINK_H
#define RAKELINK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  /**
   * Timetable or topology failed validation.
   */
  RL_STATUS_INVALID_INPUT = 3,
  /**
   * A bound is NaN or negative.
   */
  RL_STATUS_INVALID_BOUNDS = 4,
  /**
   * `w_max <= w_min` or `w_min` is infinite.
   */
  RL_STATUS_INADMISSIBLE_BOUNDS = 5,
  RL_STATUS_IO = 6,
  RL_STATUS_OUT_OF_RANGE = 7,
  RL_STATUS_INTERNAL = 8,
} RlStatus;

/**
 * A minimum rake-link cover and its objectives.
 */
typedef struct RlCover RlCover;

/**
 * A validated timetable and topology.
 */
typedef struct RlDataset RlDataset;

/**
 * Link bounds. Use `INFINITY` for an absent limit.
 */
typedef struct RlBounds {
  double w_min;
  double w_max;
  double d_max;
  double v_avg_max;
} RlBounds;

typedef struct RlObjectives {
  uint32_t f1;
  uint32_t f2;
  double f3;
  double f4;
  double f5;
} RlObjectives;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a dataset from CSV text. On success `*out` receives a handle to be
 * released with [`rl_dataset_free`].
 */
enum RlStatus rl_dataset_from_csv(const char *timetable_csv,
                                  const char *topology_csv,
                                  struct RlDataset **out);

/**
 * Reads a dataset from two CSV files.
 */
enum RlStatus rl_dataset_open(const char *timetable_path,
                              const char *topology_path,
                              struct RlDataset **out);

void rl_dataset_free(struct RlDataset *dataset);

/**
 * Number of services, or 0 for NULL.
 */
size_t rl_dataset_service_count(const struct RlDataset *dataset);

/**
 * Id of the service at timetable position `index`, or NULL when out of
 * range. The string lives as long as the dataset.
 */
const char *rl_dataset_service_id(const struct RlDataset *dataset, size_t index);

/**
 * Maximum number of simultaneously running services, or 0 for NULL.
 */
uint32_t rl_dataset_peak_density(const struct RlDataset *dataset);

/**
 * Bounds that admit every time-ordered pair: zero minimum headway and no
 * other limit.
 */
struct RlBounds rl_bounds_unbounded(void);

/**
 * Solves the minimum fleet. On success `*out` receives a cover to be
 * released with [`rl_cover_free`].
 */
enum RlStatus rl_solve(const struct RlDataset *dataset,
                       const struct RlBounds *bounds,
                       struct RlCover **out);

void rl_cover_free(struct RlCover *cover);

/**
 * Number of rake-links, or 0 for NULL.
 */
size_t rl_cover_fleet_size(const struct RlCover *cover);

/**
 * Number of services on link `link`, or 0 when out of range.
 */
size_t rl_cover_link_len(const struct RlCover *cover, size_t link);

/**
 * Copies the timetable positions of link `link`'s services into `buf`.
 * `*written` receives the full link length; at most `cap` entries are
 * copied.
 */
enum RlStatus rl_cover_link_services(const struct RlCover *cover,
                                     size_t link,
                                     size_t *buf,
                                     size_t cap,
                                     size_t *written);

enum RlStatus rl_cover_objectives(const struct RlCover *cover, struct RlObjectives *out);

/**
 * The cover as JSON (`fleet_size`, `links` of service ids, `bounds`).
 * Release with [`rl_string_free`]. NULL for a NULL cover.
 */
char *rl_cover_to_json(const struct RlCover *cover);

void rl_string_free(char *s);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next library call on the same thread.
 */
const char *rl_last_error_message(void);

const char *rl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAKELINK_H */
