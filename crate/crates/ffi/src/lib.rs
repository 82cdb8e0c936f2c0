//! C ABI over `ctxcost`.
//!
//! Objects cross the boundary as opaque handles created by `ctx_*_new` /
//! `ctx_*_load` functions and released with the matching `ctx_*_free`.
//! Every fallible function returns a [`CtxStatus`]; on failure a message is
//! available from [`ctx_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ctxcost::analysis::{paired_bootstrap, PairedSamples};
use ctxcost::cost::{ledger_report, price_call, CostError, PricingModel};
use ctxcost::run::{RunCheckpoint, RunDriver, RunError};
use ctxcost::simulator::{simulate_run, SimError, SimOptions, SweepRow, TokenStats};
use ctxcost::strategy::StrategyError;
use ctxcost::summarizer::{ExtractiveSummarizer, Summarizer};
use ctxcost::trajectory::{load_trajectory, TrajectoryError};
use ctxcost::{StrategyConfig, TokenCount, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Summarizer = 6,
    /// The replay has no turns left.
    Done = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CtxStatus, msg: impl Into<String>) -> CtxStatus {
    set_error(msg);
    status
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ctx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

fn guard(f: impl FnOnce() -> CtxStatus) -> CtxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CtxStatus::Panic, "internal panic"),
    }
}

fn run_status(e: &RunError) -> CtxStatus {
    match e {
        RunError::Strategy(StrategyError::Summarizer { .. }) => CtxStatus::Summarizer,
        RunError::Strategy(StrategyError::Config(_)) => CtxStatus::InvalidArgument,
        RunError::Io(_) => CtxStatus::Io,
        _ => CtxStatus::Validation,
    }
}

pub struct CtxTrajectory(Trajectory);

pub struct CtxStrategy(StrategyConfig);

pub struct CtxReplay {
    traj: Trajectory,
    cfg: StrategyConfig,
    pricing: PricingModel,
    summarizer: ExtractiveSummarizer,
    checkpoint: Option<RunCheckpoint>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxPricing {
    pub input_miss_per_mtok: f64,
    pub input_hit_per_mtok: f64,
    pub output_per_mtok: f64,
    pub cache_distinguished: bool,
}

impl CtxPricing {
    fn to_model(self) -> Result<PricingModel, CostError> {
        PricingModel::new(self.input_miss_per_mtok, self.input_hit_per_mtok, self.output_per_mtok, self.cache_distinguished)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxTokenTotals {
    pub reasoning: u64,
    pub action: u64,
    pub observation: u64,
    pub prompt: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxTokenStats {
    pub reasoning: u64,
    pub action: u64,
    pub observation: u64,
    pub system: u64,
    pub user: u64,
}

/// Costs are in units of 1e-12 currency.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxCurvePoint {
    pub t: u64,
    pub context_tokens: u64,
    pub input_hit: u64,
    pub input_miss: u64,
    pub call_cost_pico: u64,
    pub cumulative_cost_pico: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxLedgerTotals {
    pub grand_pico: u64,
    pub agent_pico: u64,
    pub summary_pico: u64,
    pub summary_proportion: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxSimSummary {
    pub cumulative_cost_pico: u64,
    pub max_context: u64,
    pub mean_context: f64,
    pub input_tokens: u64,
    pub summary_calls: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CtxBootstrapResult {
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub significant: bool,
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, CtxStatus> {
    // SAFETY: caller passes either NULL or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| fail(CtxStatus::NullPointer, "null output pointer"))
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, CtxStatus> {
    // SAFETY: caller passes either NULL or a valid pointer.
    unsafe { p.as_ref() }.ok_or_else(|| fail(CtxStatus::NullPointer, "null input pointer"))
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

fn boxed<T>(out: &mut *mut T, value: T) -> CtxStatus {
    *out = Box::into_raw(Box::new(value));
    CtxStatus::Ok
}

/// Loads a trajectory log.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_trajectory_load(path: *const c_char, out: *mut *mut CtxTrajectory) -> CtxStatus {
    guard(|| {
        let out = try_ffi!(unsafe { out_ref(out) });
        if path.is_null() {
            return fail(CtxStatus::NullPointer, "null path");
        }
        // SAFETY: non-null and NUL-terminated per the contract.
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            return fail(CtxStatus::InvalidArgument, "path is not UTF-8");
        };
        match load_trajectory(path) {
            Ok(t) => boxed(out, CtxTrajectory(t)),
            Err(e @ TrajectoryError::Io(_)) => fail(CtxStatus::Io, e.to_string()),
            Err(e @ TrajectoryError::Parse { .. }) => fail(CtxStatus::Parse, e.to_string()),
            Err(e @ TrajectoryError::Validation(_)) => fail(CtxStatus::Validation, e.to_string()),
        }
    })
}

/// # Safety
/// `traj` must be NULL or a handle from [`ctx_trajectory_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_trajectory_free(traj: *mut CtxTrajectory) {
    if !traj.is_null() {
        // SAFETY: allocated by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Number of turns, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_trajectory_turn_count(traj: *const CtxTrajectory) -> u64 {
    // SAFETY: live handle or NULL.
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.turns.len() as u64)
}

/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_trajectory_token_totals(traj: *const CtxTrajectory, out: *mut CtxTokenTotals) -> CtxStatus {
    guard(|| {
        let traj = try_ffi!(unsafe { in_ref(traj) });
        let out = try_ffi!(unsafe { out_ref(out) });
        let t = traj.0.token_totals();
        *out = CtxTokenTotals {
            reasoning: t.reasoning.0,
            action: t.action.0,
            observation: t.observation.0,
            prompt: t.prompt.0,
        };
        CtxStatus::Ok
    })
}

fn new_strategy(cfg: StrategyConfig, out: *mut *mut CtxStrategy) -> CtxStatus {
    guard(|| {
        let out = try_ffi!(unsafe { out_ref(out) });
        if let Err(e) = cfg.validate() {
            return fail(CtxStatus::InvalidArgument, e.to_string());
        }
        boxed(out, CtxStrategy(cfg))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_strategy_raw(out: *mut *mut CtxStrategy) -> CtxStatus {
    new_strategy(StrategyConfig::raw(), out)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_strategy_masking(window: u64, out: *mut *mut CtxStrategy) -> CtxStatus {
    new_strategy(StrategyConfig::masking(window as usize), out)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_strategy_summary(accum: u64, tail: u64, out: *mut *mut CtxStrategy) -> CtxStatus {
    new_strategy(StrategyConfig::summary(accum as usize, tail as usize), out)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_strategy_hybrid(
    accum: u64,
    tail: u64,
    mask_window: u64,
    out: *mut *mut CtxStrategy,
) -> CtxStatus {
    new_strategy(StrategyConfig::hybrid(accum as usize, tail as usize, mask_window as usize), out)
}

/// # Safety
/// `strategy` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_strategy_free(strategy: *mut CtxStrategy) {
    if !strategy.is_null() {
        // SAFETY: allocated by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(strategy) });
    }
}

/// Prices one call. Negative counts are a validation error.
///
/// # Safety
/// `pricing` must be readable; `out_pico` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_price_call(
    hit: i64,
    miss: i64,
    output: i64,
    pricing: *const CtxPricing,
    out_pico: *mut u64,
) -> CtxStatus {
    guard(|| {
        let pricing = try_ffi!(unsafe { in_ref(pricing) });
        let out = try_ffi!(unsafe { out_ref(out_pico) });
        let model = match pricing.to_model() {
            Ok(m) => m,
            Err(e) => return fail(CtxStatus::InvalidArgument, e.to_string()),
        };
        match price_call(hit, miss, output, &model) {
            Ok(cost) => {
                *out = cost.0;
                CtxStatus::Ok
            }
            Err(e) => fail(CtxStatus::Validation, e.to_string()),
        }
    })
}

/// Starts an offline replay of `traj` under `strategy`, summarizing with
/// the extractive summarizer capped at `summary_max_tokens`. The handle
/// keeps its own copies of the trajectory and strategy.
///
/// # Safety
/// All pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_replay_new(
    traj: *const CtxTrajectory,
    strategy: *const CtxStrategy,
    pricing: *const CtxPricing,
    summary_max_tokens: u64,
    out: *mut *mut CtxReplay,
) -> CtxStatus {
    guard(|| {
        let traj = try_ffi!(unsafe { in_ref(traj) });
        let strategy = try_ffi!(unsafe { in_ref(strategy) });
        let pricing = try_ffi!(unsafe { in_ref(pricing) });
        let out = try_ffi!(unsafe { out_ref(out) });
        let pricing = match pricing.to_model() {
            Ok(m) => m,
            Err(e) => return fail(CtxStatus::InvalidArgument, e.to_string()),
        };
        let summarizer = ExtractiveSummarizer::new(summary_max_tokens);
        let ck = match RunDriver::new(&traj.0, strategy.0.clone(), pricing, &summarizer) {
            Ok(d) => d.into_checkpoint(),
            Err(e) => return fail(run_status(&e), e.to_string()),
        };
        boxed(
            out,
            CtxReplay { traj: traj.0.clone(), cfg: strategy.0.clone(), pricing, summarizer, checkpoint: Some(ck) },
        )
    })
}

/// Advances one turn. Returns `Done` once every recorded turn was stepped.
///
/// # Safety
/// `replay` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_replay_step(replay: *mut CtxReplay, out: *mut CtxCurvePoint) -> CtxStatus {
    guard(|| {
        // SAFETY: live handle or NULL.
        let Some(r) = (unsafe { replay.as_mut() }) else {
            return fail(CtxStatus::NullPointer, "null replay");
        };
        let out = try_ffi!(unsafe { out_ref(out) });
        let Some(ck) = r.checkpoint.take() else {
            return fail(CtxStatus::InvalidArgument, "replay is in a failed state");
        };
        let summarizer: &dyn Summarizer = &r.summarizer;
        let mut driver = match RunDriver::resume(&r.traj, r.cfg.clone(), r.pricing, summarizer, ck) {
            Ok(d) => d,
            Err(e) => return fail(run_status(&e), e.to_string()),
        };
        let step = driver.step();
        r.checkpoint = Some(driver.into_checkpoint());
        match step {
            Ok(Some(p)) => {
                *out = CtxCurvePoint {
                    t: p.t as u64,
                    context_tokens: p.context_tokens.0,
                    input_hit: p.input_hit.0,
                    input_miss: p.input_miss.0,
                    call_cost_pico: p.call_cost.0,
                    cumulative_cost_pico: p.cumulative_cost.0,
                };
                CtxStatus::Ok
            }
            Ok(None) => CtxStatus::Done,
            Err(e) => fail(run_status(&e), e.to_string()),
        }
    })
}

/// Ledger totals of everything stepped so far.
///
/// # Safety
/// `replay` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_replay_totals(replay: *const CtxReplay, out: *mut CtxLedgerTotals) -> CtxStatus {
    guard(|| {
        let r = try_ffi!(unsafe { in_ref(replay) });
        let out = try_ffi!(unsafe { out_ref(out) });
        let Some(ck) = &r.checkpoint else {
            return fail(CtxStatus::InvalidArgument, "replay is in a failed state");
        };
        let t = ledger_report(&ck.ledger);
        *out = CtxLedgerTotals {
            grand_pico: t.grand.0,
            agent_pico: t.agent.0,
            summary_pico: t.summary.0,
            summary_proportion: t.summary_proportion,
            input_tokens: t.input_tokens.0,
            output_tokens: t.output_tokens.0,
        };
        CtxStatus::Ok
    })
}

/// # Safety
/// `replay` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ctx_replay_free(replay: *mut CtxReplay) {
    if !replay.is_null() {
        // SAFETY: allocated by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(replay) });
    }
}

/// Simulates `turns` agent calls with fixed-length summaries of
/// `summary_tokens` tokens.
///
/// # Safety
/// All pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_simulate(
    stats: *const CtxTokenStats,
    strategy: *const CtxStrategy,
    turns: u64,
    pricing: *const CtxPricing,
    summary_tokens: u64,
    out: *mut CtxSimSummary,
) -> CtxStatus {
    guard(|| {
        let stats = try_ffi!(unsafe { in_ref(stats) });
        let strategy = try_ffi!(unsafe { in_ref(strategy) });
        let pricing = try_ffi!(unsafe { in_ref(pricing) });
        let out = try_ffi!(unsafe { out_ref(out) });
        let pricing = match pricing.to_model() {
            Ok(m) => m,
            Err(e) => return fail(CtxStatus::InvalidArgument, e.to_string()),
        };
        let stats = TokenStats {
            reasoning: TokenCount(stats.reasoning),
            action: TokenCount(stats.action),
            observation: TokenCount(stats.observation),
            system: TokenCount(stats.system),
            user: TokenCount(stats.user),
        };
        let opts = SimOptions { summary_tokens: TokenCount(summary_tokens), jitter: None };
        match simulate_run(&stats, &strategy.0, turns as usize, &pricing, &opts) {
            Ok(run) => {
                let row = SweepRow::from_run(&run);
                *out = CtxSimSummary {
                    cumulative_cost_pico: row.cumulative_cost.0,
                    max_context: row.max_context.0,
                    mean_context: row.mean_context,
                    input_tokens: row.input_tokens.0,
                    summary_calls: row.summary_calls as u64,
                };
                CtxStatus::Ok
            }
            Err(e @ SimError::NoTurns) => fail(CtxStatus::InvalidArgument, e.to_string()),
            Err(SimError::Run(e)) => fail(run_status(&e), e.to_string()),
            Err(e) => fail(CtxStatus::Validation, e.to_string()),
        }
    })
}

/// Paired bootstrap of `mean(a) - mean(b)` over `n` aligned samples.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_paired_bootstrap(
    a: *const f64,
    b: *const f64,
    n: u64,
    replicates: u64,
    level: f64,
    seed: u64,
    out: *mut CtxBootstrapResult,
) -> CtxStatus {
    guard(|| {
        let out = try_ffi!(unsafe { out_ref(out) });
        if a.is_null() || b.is_null() {
            return fail(CtxStatus::NullPointer, "null sample array");
        }
        // SAFETY: both arrays hold `n` values per the contract.
        let (a, b) = unsafe { (std::slice::from_raw_parts(a, n as usize), std::slice::from_raw_parts(b, n as usize)) };
        let samples = match PairedSamples::unnamed(a.to_vec(), b.to_vec()) {
            Ok(s) => s,
            Err(e) => return fail(CtxStatus::Validation, e.to_string()),
        };
        match paired_bootstrap(&samples, replicates as usize, level, seed) {
            Ok(r) => {
                *out = CtxBootstrapResult {
                    delta: r.delta,
                    ci_low: r.ci_low,
                    ci_high: r.ci_high,
                    p_value: r.p_value,
                    significant: r.significant,
                };
                CtxStatus::Ok
            }
            Err(e) => fail(CtxStatus::InvalidArgument, e.to_string()),
        }
    })
}
