#ifndef ROBGAME_H
#define ROBGAME_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>

/**
 * Case label of the robust Cournot duopoly.
 */
typedef enum {
  RG_COURNOT_CASE_NOMINAL = 0,
  RG_COURNOT_CASE_ONE = 1,
  RG_COURNOT_CASE_TWO = 2,
  RG_COURNOT_CASE_THREE_I = 3,
  RG_COURNOT_CASE_THREE_II = 4,
  RG_COURNOT_CASE_THREE_III = 5,
} RgCournotCase;

typedef enum {
  RG_STATUS_OK = 0,
  RG_STATUS_NULL_POINTER = 1,
  RG_STATUS_INVALID_UTF8 = 2,
  RG_STATUS_GAME_ERROR = 3,
  RG_STATUS_INVALID_ARGUMENT = 4,
  RG_STATUS_NOT_AN_EQUILIBRIUM = 5,
  RG_STATUS_NOT_EPSILON_NASH = 6,
  RG_STATUS_NO_CORNER_CERTIFIED = 7,
  RG_STATUS_AMBIGUOUS_TIE = 8,
  RG_STATUS_NO_COUNTERPART = 9,
  RG_STATUS_BUFFER_TOO_SMALL = 10,
  RG_STATUS_PANIC = 11,
} RgStatus;

/**
 * Opaque game handle.
 */
typedef struct RgGame RgGame;

/**
 * Opaque list of equilibria.
 */
typedef struct RgRoeList RgRoeList;

/**
 * Robust Cournot duopoly data: inverse demand `a − b q_i − γ q_j` with
 * `(b, γ)` on the segment from `(b_lo, γ_hi)` to `(b_hi, γ_lo)`.
 */
typedef struct {
  double a;
  double b_hat;
  double gamma_hat;
  double b_lo;
  double b_hi;
  double gamma_lo;
  double gamma_hi;
  double delta;
} RgCournotParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *rg_last_error_message(void);

/**
 * Parses a game from a NUL-terminated JSON document.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
RgStatus rg_game_from_json(const char *json, RgGame **out);

/**
 * Copy of `game` with every player's uncertainty level set to `delta`.
 *
 * # Safety
 * `game` must come from this library; `out` must be writable.
 */
RgStatus rg_game_with_delta(const RgGame *game, double delta, RgGame **out);

/**
 * Releases a game. NULL is ignored.
 *
 * # Safety
 * `game` must come from this library and not be used afterwards.
 */
void rg_game_free(RgGame *game);

/**
 * Number of players, 0 for NULL.
 *
 * # Safety
 * `game` must be NULL or come from this library.
 */
size_t rg_game_player_count(const RgGame *game);

/**
 * Worst-case payoff of `player` at profile `x`.
 *
 * # Safety
 * `x` must hold `len` doubles; `out` must be writable.
 */
RgStatus rg_worst_case_payoff(const RgGame *game,
                              size_t player,
                              const double *x,
                              size_t len,
                              double *out);

/**
 * Maximin best reply of `player` to the opponents in `x`.
 *
 * # Safety
 * `x` must hold `len` doubles; `out` must be writable.
 */
RgStatus rg_best_reply(const RgGame *game, size_t player, const double *x, size_t len, double *out);

/**
 * Opportunity cost of uncertainty for `player` at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles; `out` must be writable.
 */
RgStatus rg_opportunity_cost(const RgGame *game,
                             size_t player,
                             const double *x,
                             size_t len,
                             double *out);

/**
 * Checks that `x` is an equilibrium to within `tol` in the sup norm.
 *
 * # Safety
 * `x` must hold `len` doubles; `ok` and `residual` must be writable.
 */
RgStatus rg_verify_roe(const RgGame *game,
                       const double *x,
                       size_t len,
                       double tol,
                       bool *ok,
                       double *residual);

/**
 * Enumerates equilibria with default search settings.
 *
 * # Safety
 * `game` must come from this library; `out` must be writable.
 */
RgStatus rg_find_roe(const RgGame *game, RgRoeList **out);

/**
 * Releases a list. NULL is ignored.
 *
 * # Safety
 * `list` must come from this library and not be used afterwards.
 */
void rg_roe_list_free(RgRoeList *list);

/**
 * Number of entries, 0 for NULL.
 *
 * # Safety
 * `list` must be NULL or come from this library.
 */
size_t rg_roe_list_len(const RgRoeList *list);

/**
 * Copies entry `index` (the start of a continuum) into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
RgStatus rg_roe_list_profile(const RgRoeList *list, size_t index, double *buf, size_t len);

/**
 * Whether entry `index` is a continuum of equilibria.
 *
 * # Safety
 * `out` must be writable.
 */
RgStatus rg_roe_list_is_continuum(const RgRoeList *list, size_t index, bool *out);

/**
 * Copies the far end of continuum `index`; for a point, the point itself.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
RgStatus rg_roe_list_end(const RgRoeList *list, size_t index, double *buf, size_t len);

/**
 * Largest opportunity cost over players at entry `index`.
 *
 * # Safety
 * `out` must be writable.
 */
RgStatus rg_roe_list_epsilon(const RgRoeList *list, size_t index, double *out);

/**
 * Robust reaction of a firm to competitor output `q_opp`.
 *
 * # Safety
 * `params` must be readable; `out` writable.
 */
RgStatus rg_cournot_robust_reaction(const RgCournotParams *params, double q_opp, double *out);

/**
 * Nominal Nash outputs, written to `out[0]` and `out[1]`.
 *
 * # Safety
 * `out` must hold two doubles.
 */
RgStatus rg_cournot_nominal_nash(const RgCournotParams *params, double *out);

/**
 * Uncertainty level at which the symmetric equilibrium leaves the interior
 * branch; `interior` tells whether it lies in (0, 1).
 *
 * # Safety
 * `delta_star` and `interior` must be writable.
 */
RgStatus rg_cournot_delta_star(const RgCournotParams *params, double *delta_star, bool *interior);

/**
 * Case label at the level in `params`.
 *
 * # Safety
 * `out` must be writable.
 */
RgStatus rg_cournot_case(const RgCournotParams *params, RgCournotCase *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBGAME_H */
