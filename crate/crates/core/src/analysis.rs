//! Correlation-plane sweeps, worst-case attack search and tolerable-noise
//! frontiers.
//!
//! Work items (grid nodes, distances) are independent; they are dispatched
//! through an [`Executor`] so that callers with threads can parallelize
//! without this crate depending on `std`. Results never depend on the
//! executor.

use alloc::format;
use alloc::vec::Vec;

use crate::attack::{max_correlation_on_ray, AttackClass, Criterion};
use crate::error::{invalid, Error, Result};
use crate::protocol::{key_rate, one_way_key_rate, ProtocolParams};

/// Fiber loss model `T = 10^(−α·d/10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMapping {
    pub attenuation_db_per_km: f64,
    pub distance_km: f64,
}

impl ChannelMapping {
    pub const DEFAULT_ATTENUATION: f64 = 0.2;

    pub fn new(attenuation_db_per_km: f64, distance_km: f64) -> Result<Self> {
        if !(attenuation_db_per_km > 0.0) || !attenuation_db_per_km.is_finite() {
            return Err(invalid(format!(
                "attenuation must be positive, got {attenuation_db_per_km}"
            )));
        }
        if !(distance_km >= 0.0) || !distance_km.is_finite() {
            return Err(invalid(format!("distance must be >= 0, got {distance_km}")));
        }
        Ok(ChannelMapping {
            attenuation_db_per_km,
            distance_km,
        })
    }

    pub fn transmittance(&self) -> f64 {
        distance_to_transmittance(self)
    }
}

pub fn distance_to_transmittance(mapping: &ChannelMapping) -> f64 {
    libm::pow(10.0, -mapping.attenuation_db_per_km * mapping.distance_km / 10.0)
}

/// Ordered parallel map. Implementations must return `f(items[i])` at
/// position `i`.
pub trait Executor: Sync {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        items.iter().map(f).collect()
    }
}

/// `n` points from `−c` to `c`, exactly antisymmetric about the centre.
fn symmetric_axis(c: f64, n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| c * (2.0 * i as f64 - m) / m)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeMode {
    /// `[−C_phys, C_phys]²` with `C_phys` the physical bound on the
    /// anti-diagonal ray `(1, −1)`.
    PhysicalBox,
    /// `[−c, c]²`.
    Custom(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub c_x: Vec<f64>,
    pub c_p: Vec<f64>,
    /// Row-major over `(c_x, c_p)`; `None` at unphysical nodes.
    pub rates: Vec<Option<f64>>,
    pub classes: Vec<AttackClass>,
    /// `(c_x, c_p, K)` of the smallest rate on the grid.
    pub argmin: Option<(f64, f64, f64)>,
    /// Physical bound along `(1, −1)`.
    pub c_phys_max: f64,
    /// Separable bound along `(1, 1)`.
    pub c_sep_max: f64,
}

impl SweepResult {
    pub fn rate(&self, ix: usize, ip: usize) -> Option<f64> {
        self.rates[ix * self.c_p.len() + ip]
    }

    pub fn class(&self, ix: usize, ip: usize) -> AttackClass {
        self.classes[ix * self.c_p.len() + ip]
    }
}

fn evaluate(params: &ProtocolParams, c_x: f64, c_p: f64) -> Result<(AttackClass, Option<f64>)> {
    let attack = params.attack(c_x, c_p)?;
    let class = attack.classify();
    if !class.is_physical() {
        return Ok((class, None));
    }
    Ok((class, Some(key_rate(params, &attack)?.key_rate)))
}

/// Key rate on a `resolution × resolution` grid of the correlation plane.
///
/// When the physical region collapses to the origin (vacuum ancillas) the
/// result has the single node `(0, 0)`.
pub fn sweep_plane<E: Executor>(
    params: &ProtocolParams,
    resolution: usize,
    range: RangeMode,
    executor: &E,
) -> Result<SweepResult> {
    params.validate()?;
    if resolution < 3 || resolution % 2 == 0 {
        return Err(invalid(format!(
            "grid resolution must be odd and >= 3, got {resolution}"
        )));
    }
    let v_e = params.ancilla_variance();
    let c_phys_max = max_correlation_on_ray(v_e, v_e, (1.0, -1.0), Criterion::Physical)?;
    let c_sep_max = max_correlation_on_ray(v_e, v_e, (1.0, 1.0), Criterion::Separable)?;
    let half = match range {
        RangeMode::PhysicalBox => c_phys_max,
        RangeMode::Custom(c) if c >= 0.0 && c.is_finite() => c,
        RangeMode::Custom(c) => return Err(invalid(format!("invalid sweep range {c}"))),
    };
    let axis = if half > 0.0 {
        symmetric_axis(half, resolution)
    } else {
        alloc::vec![0.0]
    };
    let n = axis.len();
    let nodes: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&x| axis.iter().map(move |&p| (x, p)))
        .collect();
    let results = executor.map(&nodes, |&(x, p)| evaluate(params, x, p));

    let mut rates = Vec::with_capacity(n * n);
    let mut classes = Vec::with_capacity(n * n);
    let mut argmin: Option<(f64, f64, f64)> = None;
    for (&(x, p), r) in nodes.iter().zip(results) {
        let (class, rate) = r?;
        if let Some(k) = rate {
            if argmin.map_or(true, |(_, _, best)| k < best) {
                argmin = Some((x, p, k));
            }
        }
        rates.push(rate);
        classes.push(class);
    }
    Ok(SweepResult {
        c_x: axis.clone(),
        c_p: axis,
        rates,
        classes,
        argmin,
        c_phys_max,
        c_sep_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    FullPlane,
    /// Restricted to `C_x = C_p`.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Maximum number of grid levels.
    pub refinement_levels: usize,
    pub mode: SearchMode,
    /// Points per axis on each level.
    pub grid: usize,
    /// Shift of the first grid, in cells.
    pub offset: f64,
    /// Stop once the bracket is narrower than this.
    pub tolerance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            refinement_levels: 12,
            mode: SearchMode::Diagonal,
            grid: 21,
            offset: 0.0,
            tolerance: 1e-5,
        }
    }
}

impl SearchOptions {
    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalAttack {
    pub c_x: f64,
    pub c_p: f64,
    pub key_rate: f64,
    pub class: AttackClass,
    pub v_e: f64,
    /// Grid levels actually run.
    pub levels: usize,
    /// Width of the final bracket.
    pub bracket: f64,
}

/// Rate-minimizing attack by successive grid refinement.
///
/// Each level evaluates a `grid × grid` lattice (or `grid` points on the
/// diagonal) over the current bracket and recentres a bracket of three
/// cells on the best node. Unphysical nodes are skipped.
pub fn find_optimal_attack<E: Executor>(
    params: &ProtocolParams,
    options: &SearchOptions,
    executor: &E,
) -> Result<OptimalAttack> {
    params.validate()?;
    if options.refinement_levels == 0 {
        return Err(invalid("refinement_levels must be >= 1"));
    }
    if options.grid < 3 {
        return Err(invalid("search grid needs at least 3 points per axis"));
    }
    if !(options.tolerance > 0.0) || !options.offset.is_finite() {
        return Err(invalid("search tolerance must be positive and offset finite"));
    }
    let v_e = params.ancilla_variance();
    let half = match options.mode {
        SearchMode::FullPlane => max_correlation_on_ray(v_e, v_e, (1.0, -1.0), Criterion::Physical)?,
        SearchMode::Diagonal => max_correlation_on_ray(v_e, v_e, (1.0, 1.0), Criterion::Physical)?,
    };

    let finish = |c_x: f64, c_p: f64, k: f64, levels: usize, bracket: f64| -> Result<OptimalAttack> {
        Ok(OptimalAttack {
            c_x,
            c_p,
            key_rate: k,
            class: params.attack(c_x, c_p)?.classify(),
            v_e,
            levels,
            bracket,
        })
    };
    if half <= 0.0 {
        let (_, k) = evaluate(params, 0.0, 0.0)?;
        let k = k.ok_or_else(|| Error::EmptyDomain("origin is unphysical".into()))?;
        return finish(0.0, 0.0, k, 1, 0.0);
    }

    let n = options.grid;
    let h0 = 2.0 * half / (n - 1) as f64;
    let shift = options.offset * h0;
    let (mut cx0, mut cp0) = (shift, shift);
    let mut width = 2.0 * half;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut levels = 0;
    while levels < options.refinement_levels {
        levels += 1;
        let h = width / (n - 1) as f64;
        let axis = |centre: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centre - 0.5 * width + i as f64 * h)
                .collect()
        };
        let nodes: Vec<(f64, f64)> = match options.mode {
            SearchMode::Diagonal => axis(cx0).into_iter().map(|c| (c, c)).collect(),
            SearchMode::FullPlane => {
                let (ax, ap) = (axis(cx0), axis(cp0));
                ax.iter()
                    .flat_map(|&x| ap.iter().map(move |&p| (x, p)))
                    .collect()
            }
        };
        let results = executor.map(&nodes, |&(x, p)| evaluate(params, x, p));
        let mut level_best: Option<(f64, f64, f64)> = None;
        for (&(x, p), r) in nodes.iter().zip(results) {
            if let (_, Some(k)) = r? {
                if level_best.map_or(true, |(_, _, b)| k < b) {
                    level_best = Some((x, p, k));
                }
            }
        }
        let Some(lb) = level_best else {
            return Err(Error::EmptyDomain(format!(
                "no physical attack in the search bracket at level {levels}"
            )));
        };
        if best.map_or(true, |(_, _, b)| lb.2 <= b) {
            best = Some(lb);
        }
        let (bx, bp, _) = best.expect("set above");
        cx0 = bx;
        cp0 = bp;
        width = 3.0 * h;
        if width < options.tolerance {
            break;
        }
    }
    let (x, p, k) = best.expect("at least one level ran");
    finish(x, p, k, levels, width)
}

/// `c / C_sep^max`, where `C_sep^max = V_E − 1` is the separable bound on
/// the diagonal.
pub fn normalized_correlation(c_star: f64, v_e: f64) -> Result<f64> {
    if !(v_e > 1.0) {
        return Err(invalid(format!(
            "normalization needs V_E > 1, got {v_e}"
        )));
    }
    let c_sep = max_correlation_on_ray(v_e, v_e, (1.0, 1.0), Criterion::Separable)?;
    Ok(c_star / c_sep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierStatus {
    /// `K(lower) > 0 ≥ K(upper)`.
    Bracketed,
    /// No positive rate even as `ε → 0⁺`; the tolerance is recorded as 0.
    NeverPositive,
    /// The rate is still positive at the cap; the tolerance is the cap.
    PositiveAtCap,
}

impl FrontierStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FrontierStatus::Bracketed => "bracketed",
            FrontierStatus::NeverPositive => "never_positive",
            FrontierStatus::PositiveAtCap => "positive_at_cap",
        }
    }
}

/// Largest tolerable excess noise, with its bisection certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Reported tolerance: `lower` when bracketed.
    pub epsilon: f64,
    /// Largest probed noise with a positive rate.
    pub lower: f64,
    /// Smallest probed noise with a non-positive rate.
    pub upper: f64,
    pub rate_lower: f64,
    pub rate_upper: f64,
    pub status: FrontierStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierOptions {
    pub initial_upper: f64,
    pub cap: f64,
    pub tolerance: f64,
    /// Noise used to probe the `ε → 0⁺` limit.
    pub floor: f64,
}

impl Default for FrontierOptions {
    fn default() -> Self {
        FrontierOptions {
            initial_upper: 2.0,
            cap: 16.0,
            tolerance: 1e-4,
            floor: 1e-6,
        }
    }
}

/// Bisection for the sign change of `rate(ε)`.
pub fn tolerable_noise(
    rate: impl Fn(f64) -> Result<f64>,
    options: &FrontierOptions,
) -> Result<Tolerance> {
    if !(options.floor > 0.0 && options.floor < options.initial_upper)
        || !(options.initial_upper <= options.cap)
        || !(options.tolerance > 0.0)
    {
        return Err(invalid("inconsistent frontier options"));
    }
    let k_floor = rate(options.floor)?;
    if !(k_floor > 0.0) {
        return Ok(Tolerance {
            epsilon: 0.0,
            lower: 0.0,
            upper: options.floor,
            rate_lower: f64::NAN,
            rate_upper: k_floor,
            status: FrontierStatus::NeverPositive,
        });
    }
    let (mut lo, mut k_lo) = (options.floor, k_floor);
    let mut hi = options.initial_upper;
    let mut k_hi = rate(hi)?;
    while k_hi > 0.0 {
        lo = hi;
        k_lo = k_hi;
        if hi >= options.cap {
            return Ok(Tolerance {
                epsilon: options.cap,
                lower: options.cap,
                upper: f64::INFINITY,
                rate_lower: k_hi,
                rate_upper: f64::NAN,
                status: FrontierStatus::PositiveAtCap,
            });
        }
        hi = (2.0 * hi).min(options.cap);
        k_hi = rate(hi)?;
    }
    while hi - lo > options.tolerance {
        let mid = 0.5 * (lo + hi);
        let k = rate(mid)?;
        if k > 0.0 {
            lo = mid;
            k_lo = k;
        } else {
            hi = mid;
            k_hi = k;
        }
    }
    Ok(Tolerance {
        epsilon: lo,
        lower: lo,
        upper: hi,
        rate_lower: k_lo,
        rate_upper: k_hi,
        status: FrontierStatus::Bracketed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierSide {
    /// Two-way protocol against the rate-minimizing two-mode attack.
    TwoWayOptimalAttack,
    /// One-way baseline with modulation variance `v_a`.
    OneWay,
}

/// Tolerable noise of one side at a transmittance, using the template's
/// other parameters.
pub fn tolerable_noise_at(
    template: &ProtocolParams,
    transmittance: f64,
    side: FrontierSide,
    search: &SearchOptions,
    options: &FrontierOptions,
) -> Result<Tolerance> {
    let base = template.with_transmittance(transmittance)?;
    match side {
        FrontierSide::TwoWayOptimalAttack => tolerable_noise(
            |eps| {
                let p = base.with_excess_noise(eps)?;
                Ok(find_optimal_attack(&p, search, &Serial)?.key_rate)
            },
            options,
        ),
        FrontierSide::OneWay => tolerable_noise(
            |eps| Ok(one_way_key_rate(base.v_a, transmittance, eps, base.beta)?.key_rate),
            options,
        ),
    }
}

/// Tolerable noise at each distance. Distances are independent work items.
pub fn noise_frontier<E: Executor>(
    distances_km: &[f64],
    attenuation_db_per_km: f64,
    template: &ProtocolParams,
    side: FrontierSide,
    search: &SearchOptions,
    options: &FrontierOptions,
    executor: &E,
) -> Result<Vec<Tolerance>> {
    check_distances(distances_km)?;
    let transmittances = distances_km
        .iter()
        .map(|&d| Ok(ChannelMapping::new(attenuation_db_per_km, d)?.transmittance()))
        .collect::<Result<Vec<f64>>>()?;
    executor
        .map(&transmittances, |&t| {
            tolerable_noise_at(template, t, side, search, options)
        })
        .into_iter()
        .collect()
}

fn check_distances(distances_km: &[f64]) -> Result<()> {
    if distances_km.is_empty() {
        return Err(invalid("no distances given"));
    }
    if distances_km.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(invalid("distances must be positive"));
    }
    if distances_km.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("distances must be strictly ascending"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierPoint {
    pub distance_km: f64,
    pub two_way: Tolerance,
    pub one_way: Tolerance,
}

/// Two-way and one-way frontiers on the same distances.
pub fn compare_frontiers<E: Executor>(
    distances_km: &[f64],
    attenuation_db_per_km: f64,
    template: &ProtocolParams,
    search: &SearchOptions,
    options: &FrontierOptions,
    executor: &E,
) -> Result<Vec<FrontierPoint>> {
    check_distances(distances_km)?;
    let jobs: Vec<(usize, FrontierSide)> = (0..distances_km.len())
        .flat_map(|i| [(i, FrontierSide::TwoWayOptimalAttack), (i, FrontierSide::OneWay)])
        .collect();
    let results = executor.map(&jobs, |&(i, side)| {
        let t = ChannelMapping::new(attenuation_db_per_km, distances_km[i])?.transmittance();
        tolerable_noise_at(template, t, side, search, options)
    });
    let mut out = Vec::with_capacity(distances_km.len());
    let mut it = results.into_iter();
    for &d in distances_km {
        let two_way = it.next().expect("two jobs per distance")?;
        let one_way = it.next().expect("two jobs per distance")?;
        out.push(FrontierPoint {
            distance_km: d,
            two_way,
            one_way,
        });
    }
    Ok(out)
}
