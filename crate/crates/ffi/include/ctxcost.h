#ifndef CTXCOST_H
#define CTXCOST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CtxStatus {
  CTX_STATUS_OK = 0,
  CTX_STATUS_NULL_POINTER = 1,
  CTX_STATUS_INVALID_ARGUMENT = 2,
  CTX_STATUS_IO = 3,
  CTX_STATUS_PARSE = 4,
  CTX_STATUS_VALIDATION = 5,
  CTX_STATUS_SUMMARIZER = 6,
  /**
   * The replay has no turns left.
   */
  CTX_STATUS_DONE = 7,
  CTX_STATUS_PANIC = 8,
} CtxStatus;

typedef struct CtxReplay CtxReplay;

typedef struct CtxStrategy CtxStrategy;

typedef struct CtxTrajectory CtxTrajectory;

typedef struct CtxTokenTotals {
  uint64_t reasoning;
  uint64_t action;
  uint64_t observation;
  uint64_t prompt;
} CtxTokenTotals;

typedef struct CtxPricing {
  double input_miss_per_mtok;
  double input_hit_per_mtok;
  double output_per_mtok;
  bool cache_distinguished;
} CtxPricing;

/**
 * Costs are in units of 1e-12 currency.
 */
typedef struct CtxCurvePoint {
  uint64_t t;
  uint64_t context_tokens;
  uint64_t input_hit;
  uint64_t input_miss;
  uint64_t call_cost_pico;
  uint64_t cumulative_cost_pico;
} CtxCurvePoint;

typedef struct CtxLedgerTotals {
  uint64_t grand_pico;
  uint64_t agent_pico;
  uint64_t summary_pico;
  double summary_proportion;
  uint64_t input_tokens;
  uint64_t output_tokens;
} CtxLedgerTotals;

typedef struct CtxTokenStats {
  uint64_t reasoning;
  uint64_t action;
  uint64_t observation;
  uint64_t system;
  uint64_t user;
} CtxTokenStats;

typedef struct CtxSimSummary {
  uint64_t cumulative_cost_pico;
  uint64_t max_context;
  double mean_context;
  uint64_t input_tokens;
  uint64_t summary_calls;
} CtxSimSummary;

typedef struct CtxBootstrapResult {
  double delta;
  double ci_low;
  double ci_high;
  double p_value;
  bool significant;
} CtxBootstrapResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ctx_last_error_message(void);

/**
 * Loads a trajectory log.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CtxStatus ctx_trajectory_load(const char *path, struct CtxTrajectory **out);

/**
 * # Safety
 * `traj` must be NULL or a handle from [`ctx_trajectory_load`] not yet freed.
 */
void ctx_trajectory_free(struct CtxTrajectory *traj);

/**
 * Number of turns, or 0 for NULL.
 *
 * # Safety
 * `traj` must be NULL or a live handle.
 */
uint64_t ctx_trajectory_turn_count(const struct CtxTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum CtxStatus ctx_trajectory_token_totals(const struct CtxTrajectory *traj,
                                           struct CtxTokenTotals *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CtxStatus ctx_strategy_raw(struct CtxStrategy **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CtxStatus ctx_strategy_masking(uint64_t window, struct CtxStrategy **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CtxStatus ctx_strategy_summary(uint64_t accum, uint64_t tail, struct CtxStrategy **out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CtxStatus ctx_strategy_hybrid(uint64_t accum,
                                   uint64_t tail,
                                   uint64_t mask_window,
                                   struct CtxStrategy **out);

/**
 * # Safety
 * `strategy` must be NULL or a live handle.
 */
void ctx_strategy_free(struct CtxStrategy *strategy);

/**
 * Prices one call. Negative counts are a validation error.
 *
 * # Safety
 * `pricing` must be readable; `out_pico` writable.
 */
enum CtxStatus ctx_price_call(int64_t hit,
                              int64_t miss,
                              int64_t output,
                              const struct CtxPricing *pricing,
                              uint64_t *out_pico);

/**
 * Starts an offline replay of `traj` under `strategy`, summarizing with
 * the extractive summarizer capped at `summary_max_tokens`. The handle
 * keeps its own copies of the trajectory and strategy.
 *
 * # Safety
 * All pointers must be valid; `out` writable.
 */
enum CtxStatus ctx_replay_new(const struct CtxTrajectory *traj,
                              const struct CtxStrategy *strategy,
                              const struct CtxPricing *pricing,
                              uint64_t summary_max_tokens,
                              struct CtxReplay **out);

/**
 * Advances one turn. Returns `Done` once every recorded turn was stepped.
 *
 * # Safety
 * `replay` must be a live handle; `out` writable.
 */
enum CtxStatus ctx_replay_step(struct CtxReplay *replay, struct CtxCurvePoint *out);

/**
 * Ledger totals of everything stepped so far.
 *
 * # Safety
 * `replay` must be a live handle; `out` writable.
 */
enum CtxStatus ctx_replay_totals(const struct CtxReplay *replay, struct CtxLedgerTotals *out);

/**
 * # Safety
 * `replay` must be NULL or a live handle.
 */
void ctx_replay_free(struct CtxReplay *replay);

/**
 * Simulates `turns` agent calls with fixed-length summaries of
 * `summary_tokens` tokens.
 *
 * # Safety
 * All pointers must be valid; `out` writable.
 */
enum CtxStatus ctx_simulate(const struct CtxTokenStats *stats,
                            const struct CtxStrategy *strategy,
                            uint64_t turns,
                            const struct CtxPricing *pricing,
                            uint64_t summary_tokens,
                            struct CtxSimSummary *out);

/**
 * Paired bootstrap of `mean(a) - mean(b)` over `n` aligned samples.
 *
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `out` writable.
 */
enum CtxStatus ctx_paired_bootstrap(const double *a,
                                    const double *b,
                                    uint64_t n,
                                    uint64_t replicates,
                                    double level,
                                    uint64_t seed,
                                    struct CtxBootstrapResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXCOST_H */
