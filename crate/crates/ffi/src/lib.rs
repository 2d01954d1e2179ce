//! C ABI over the `robgame` solver.
//!
//! Conventions:
//! * every fallible call returns an [`RgStatus`] and writes results through
//!   out-pointers; on failure [`rg_last_error_message`] describes the error;
//! * games and equilibrium lists are opaque handles released with their
//!   `_free` function;
//! * player indices are zero-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use robgame::cournot::{self, CournotCase, CournotParams};
use robgame::{EquilibriumReport, Error, Game, RoeKind, RoeOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    GameError = 3,
    InvalidArgument = 4,
    NotAnEquilibrium = 5,
    NotEpsilonNash = 6,
    NoCornerCertified = 7,
    AmbiguousTie = 8,
    NoCounterpart = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Case label of the robust Cournot duopoly.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgCournotCase {
    Nominal = 0,
    One = 1,
    Two = 2,
    ThreeI = 3,
    ThreeIi = 4,
    ThreeIii = 5,
}

/// Robust Cournot duopoly data: inverse demand `a − b q_i − γ q_j` with
/// `(b, γ)` on the segment from `(b_lo, γ_hi)` to `(b_hi, γ_lo)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RgCournotParams {
    pub a: f64,
    pub b_hat: f64,
    pub gamma_hat: f64,
    pub b_lo: f64,
    pub b_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub delta: f64,
}

impl From<&RgCournotParams> for CournotParams {
    fn from(p: &RgCournotParams) -> Self {
        CournotParams {
            a: p.a,
            b_hat: p.b_hat,
            gamma_hat: p.gamma_hat,
            b_lo: p.b_lo,
            b_hi: p.b_hi,
            gamma_lo: p.gamma_lo,
            gamma_hi: p.gamma_hi,
            delta: p.delta,
        }
    }
}

/// Opaque game handle.
pub struct RgGame(Game);

/// Opaque list of equilibria.
pub struct RgRoeList(Vec<EquilibriumReport>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(RgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Expr(_) | Error::Game(_) => RgStatus::GameError,
            Error::PlayerIndex { .. } | Error::ProfileLength { .. } | Error::InvalidArgument(_) => {
                RgStatus::InvalidArgument
            }
            Error::NoCornerCertified => RgStatus::NoCornerCertified,
            Error::AmbiguousTie { .. } => RgStatus::AmbiguousTie,
            Error::NotAnEquilibrium { .. } => RgStatus::NotAnEquilibrium,
            Error::NotEpsilonNash { .. } => RgStatus::NotEpsilonNash,
            Error::NoCounterpart => RgStatus::NoCounterpart,
        };
        Fail(status, e.to_string())
    }
}

impl From<robgame::GameError> for Fail {
    fn from(e: robgame::GameError) -> Self {
        Fail(RgStatus::GameError, e.to_string())
    }
}

fn null() -> Fail {
    Fail(RgStatus::NullPointer, "null pointer argument".into())
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RgStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RgStatus::Panic
        }
    }
}

unsafe fn game_ref<'a>(game: *const RgGame) -> Result<&'a Game, Fail> {
    game.as_ref().map(|g| &g.0).ok_or_else(null)
}

unsafe fn slice<'a>(x: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if x.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(x, len))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a game from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_game_from_json(json: *const c_char, out: *mut *mut RgGame) -> RgStatus {
    guard(|| {
        if json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(RgStatus::InvalidUtf8, e.to_string()))?;
        let game = robgame::load_game(text.as_bytes())?;
        write(out, Box::into_raw(Box::new(RgGame(game))))
    })
}

/// Copy of `game` with every player's uncertainty level set to `delta`.
///
/// # Safety
/// `game` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_game_with_delta(game: *const RgGame, delta: f64, out: *mut *mut RgGame) -> RgStatus {
    guard(|| {
        let g = game_ref(game)?.with_uniform_delta(delta)?;
        write(out, Box::into_raw(Box::new(RgGame(g))))
    })
}

/// Releases a game. NULL is ignored.
///
/// # Safety
/// `game` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rg_game_free(game: *mut RgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of players, 0 for NULL.
///
/// # Safety
/// `game` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rg_game_player_count(game: *const RgGame) -> usize {
    game.as_ref().map_or(0, |g| g.0.n())
}

/// Worst-case payoff of `player` at profile `x`.
///
/// # Safety
/// `x` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_worst_case_payoff(
    game: *const RgGame,
    player: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RgStatus {
    guard(|| {
        let wc = robgame::worst_case_payoff(game_ref(game)?, player, slice(x, len)?)?;
        write(out, wc.value)
    })
}

/// Maximin best reply of `player` to the opponents in `x`.
///
/// # Safety
/// `x` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_best_reply(
    game: *const RgGame,
    player: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RgStatus {
    guard(|| {
        let r = robgame::best_reply_maximin(game_ref(game)?, player, slice(x, len)?)?;
        write(out, r)
    })
}

/// Opportunity cost of uncertainty for `player` at `x`.
///
/// # Safety
/// `x` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_opportunity_cost(
    game: *const RgGame,
    player: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RgStatus {
    guard(|| {
        let c = robgame::opportunity_cost(game_ref(game)?, player, slice(x, len)?)?;
        write(out, c)
    })
}

/// Checks that `x` is an equilibrium to within `tol` in the sup norm.
///
/// # Safety
/// `x` must hold `len` doubles; `ok` and `residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_verify_roe(
    game: *const RgGame,
    x: *const f64,
    len: usize,
    tol: f64,
    ok: *mut bool,
    residual: *mut f64,
) -> RgStatus {
    guard(|| {
        let (is_roe, r) = robgame::verify_roe(game_ref(game)?, slice(x, len)?, tol)?;
        write(ok, is_roe)?;
        write(residual, r)
    })
}

/// Enumerates equilibria with default search settings.
///
/// # Safety
/// `game` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_find_roe(game: *const RgGame, out: *mut *mut RgRoeList) -> RgStatus {
    guard(|| {
        let found = robgame::find_roe(game_ref(game)?, &RoeOptions::default())?;
        write(out, Box::into_raw(Box::new(RgRoeList(found.equilibria))))
    })
}

/// Releases a list. NULL is ignored.
///
/// # Safety
/// `list` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rg_roe_list_free(list: *mut RgRoeList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// Number of entries, 0 for NULL.
///
/// # Safety
/// `list` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn rg_roe_list_len(list: *const RgRoeList) -> usize {
    list.as_ref().map_or(0, |l| l.0.len())
}

unsafe fn entry<'a>(list: *const RgRoeList, index: usize) -> Result<&'a EquilibriumReport, Fail> {
    let l = list.as_ref().ok_or_else(null)?;
    l.0.get(index)
        .ok_or_else(|| Fail(RgStatus::InvalidArgument, format!("index {index} out of range for {} entries", l.0.len())))
}

unsafe fn copy_profile(p: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if len < p.len() {
        return Err(Fail(RgStatus::BufferTooSmall, format!("need {} doubles, got {len}", p.len())));
    }
    if buf.is_null() {
        return Err(null());
    }
    ptr::copy_nonoverlapping(p.as_ptr(), buf, p.len());
    Ok(())
}

/// Copies entry `index` (the start of a continuum) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rg_roe_list_profile(
    list: *const RgRoeList,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> RgStatus {
    guard(|| copy_profile(&entry(list, index)?.profile, buf, len))
}

/// Whether entry `index` is a continuum of equilibria.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_roe_list_is_continuum(list: *const RgRoeList, index: usize, out: *mut bool) -> RgStatus {
    guard(|| write(out, entry(list, index)?.kind == RoeKind::IntervalContinuum))
}

/// Copies the far end of continuum `index`; for a point, the point itself.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rg_roe_list_end(list: *const RgRoeList, index: usize, buf: *mut f64, len: usize) -> RgStatus {
    guard(|| {
        let e = entry(list, index)?;
        copy_profile(e.end.as_ref().unwrap_or(&e.profile), buf, len)
    })
}

/// Largest opportunity cost over players at entry `index`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_roe_list_epsilon(list: *const RgRoeList, index: usize, out: *mut f64) -> RgStatus {
    guard(|| write(out, entry(list, index)?.epsilon))
}

fn cournot_params(p: *const RgCournotParams) -> Result<CournotParams, Fail> {
    // SAFETY: the callers' contracts require `p` to be NULL or valid.
    let p: CournotParams = unsafe { p.as_ref() }.ok_or_else(null)?.into();
    p.validate().map_err(|e| Fail(RgStatus::InvalidArgument, e.to_string()))?;
    Ok(p)
}

/// Robust reaction of a firm to competitor output `q_opp`.
///
/// # Safety
/// `params` must be readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rg_cournot_robust_reaction(
    params: *const RgCournotParams,
    q_opp: f64,
    out: *mut f64,
) -> RgStatus {
    guard(|| {
        let p = cournot_params(params)?;
        if q_opp.is_nan() || q_opp < 0.0 {
            return Err(Fail(RgStatus::InvalidArgument, "q_opp must be non-negative".into()));
        }
        write(out, cournot::robust_reaction(&p, q_opp))
    })
}

/// Nominal Nash outputs, written to `out[0]` and `out[1]`.
///
/// # Safety
/// `out` must hold two doubles.
#[no_mangle]
pub unsafe extern "C" fn rg_cournot_nominal_nash(params: *const RgCournotParams, out: *mut f64) -> RgStatus {
    guard(|| copy_profile(&cournot::nominal_nash(&cournot_params(params)?), out, 2))
}

/// Uncertainty level at which the symmetric equilibrium leaves the interior
/// branch; `interior` tells whether it lies in (0, 1).
///
/// # Safety
/// `delta_star` and `interior` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_cournot_delta_star(
    params: *const RgCournotParams,
    delta_star: *mut f64,
    interior: *mut bool,
) -> RgStatus {
    guard(|| {
        let d = cournot::delta_star(&cournot_params(params)?)?;
        write(delta_star, d.delta_star)?;
        write(interior, d.interior)
    })
}

/// Case label at the level in `params`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rg_cournot_case(params: *const RgCournotParams, out: *mut RgCournotCase) -> RgStatus {
    guard(|| {
        let c = match cournot::classify(&cournot_params(params)?) {
            CournotCase::Nominal => RgCournotCase::Nominal,
            CournotCase::One => RgCournotCase::One,
            CournotCase::Two => RgCournotCase::Two,
            CournotCase::ThreeI => RgCournotCase::ThreeI,
            CournotCase::ThreeII => RgCournotCase::ThreeIi,
            CournotCase::ThreeIII => RgCournotCase::ThreeIii,
        };
        write(out, c)
    })
}
