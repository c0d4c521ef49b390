//! Full Monte Carlo ground truth: network snapshots, instantaneous SIR under
//! the cooperation policies and empirical coverage.

use std::f64::consts::PI;

use rand::RngExt;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{AssociationResult, Method};
use crate::channel::{los_probability, ChannelError, FadingParams};
use crate::coverage::CoverageReport;
use crate::model::{db_to_linear, ConfigError, LinkState, LinkStateVector, Tier, ValidatedConfig};
use crate::numerics::{
    chunked_map, integrate_1d, NumericsError, QuadratureSpec, RngStream, StreamRng,
};

/// Minimum trial count for [`empirical_coverage`].
pub const MIN_COVERAGE_TRIALS: usize = 1000;

/// Operational altitude cap for aerial users, meters above the TBS plane.
pub const MAX_USER_ALTITUDE: f64 = 300.0;

/// Far-field fluctuation allowed relative to the in-window mean interference.
pub const TAIL_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation window radius {radius} m is below the minimum {min} m")]
    WindowTooSmall { radius: f64, min: f64 },
    #[error("interference beyond the {radius} m window has std {tail_std:e}, above 1% of the in-window mean {in_window_mean:e}")]
    TailTooLarge {
        radius: f64,
        tail_std: f64,
        in_window_mean: f64,
    },
    #[error("empirical coverage needs at least {MIN_COVERAGE_TRIALS} trials, got {0}")]
    TooFewTrials(usize),
    #[error("TBS interference of an unbounded field diverges: far-field links have path-loss exponent {alpha} <= 2")]
    DivergentInterference { alpha: f64 },
}

/// One network snapshot. Heights are relative to the TBS plane: TBSs sit at
/// `z = 0`, ABSs at `z = H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub abs_positions: Vec<[f64; 3]>,
    pub tbs_positions: Vec<[f64; 3]>,
    pub region_radius: f64,
    /// Mean interference power from TBSs outside the window, added as a
    /// deterministic term. Zero for closed (finite) networks.
    pub far_field: f64,
}

const WINDOW_GROWTH_STEPS: usize = 6;

/// `max(5/√(πλ), 3 r_C)`.
pub fn default_window_radius(cfg: &ValidatedConfig) -> f64 {
    (5.0 / (PI * cfg.lambda()).sqrt()).max(3.0 * cfg.r_c())
}

/// Smallest accepted window: three mean nearest-TBS distances.
pub fn min_window_radius(cfg: &ValidatedConfig) -> f64 {
    3.0 * 0.5 / cfg.lambda().sqrt()
}

/// `∫ 2πλ z Σ_ζ P_ζ(z) E[G^k] (z²+h²)^(-kα_ζ/2) dz` over `[lo, hi]`: the
/// k-th cumulant of TBS interference from that annulus.
pub fn tbs_field_cumulant(
    cfg: &ValidatedConfig,
    k: u32,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64, SimError> {
    let h = cfg.h();
    let mut moments = [0.0; 2];
    for (i, s) in [LinkState::Los, LinkState::Nlos].into_iter().enumerate() {
        let m = cfg.m(Tier::Tbs, s);
        // E[G^k] for G ~ Gamma(m, Ω/m)
        moments[i] = (0..k).map(|j| (m + j as f64) * cfg.omega() / m).product();
    }
    let (al, an) = (
        cfg.alpha(Tier::Tbs, LinkState::Los),
        cfg.alpha(Tier::Tbs, LinkState::Nlos),
    );
    let kf = k as f64;
    if hi.is_infinite() {
        let pl_far = los_probability(f64::INFINITY, h, cfg.env());
        for (p, alpha) in [(pl_far, al), (1.0 - pl_far, an)] {
            if p > 0.0 && kf * alpha <= 2.0 {
                return Err(SimError::DivergentInterference { alpha });
            }
        }
    }
    let f = |z: f64| {
        let d2 = z * z + h * h;
        let pl = los_probability(z, h, cfg.env());
        2.0 * PI
            * cfg.lambda()
            * z
            * (pl * moments[0] * d2.powf(-0.5 * kf * al)
                + (1.0 - pl) * moments[1] * d2.powf(-0.5 * kf * an))
    };
    Ok(integrate_1d(f, lo, hi, spec)?)
}

/// Simulation window with its analytic far-field correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    pub radius: f64,
    pub far_field_mean: f64,
    pub far_field_std: f64,
    pub in_window_mean: f64,
}

impl SimWindow {
    /// Default window, widened by 1.5x steps until the tail bound holds.
    pub fn for_config(cfg: &ValidatedConfig) -> Result<Self, SimError> {
        let mut radius = default_window_radius(cfg);
        for _ in 0..WINDOW_GROWTH_STEPS {
            match Self::with_radius(cfg, radius) {
                Err(SimError::TailTooLarge { .. }) => radius *= 1.5,
                other => return other,
            }
        }
        Self::with_radius(cfg, radius)
    }

    /// Rejects windows whose neglected far-field fluctuation exceeds
    /// [`TAIL_TOLERANCE`] of the in-window mean.
    pub fn with_radius(cfg: &ValidatedConfig, radius: f64) -> Result<Self, SimError> {
        let min = min_window_radius(cfg);
        if !(radius >= min) {
            return Err(SimError::WindowTooSmall { radius, min });
        }
        let spec = QuadratureSpec::default();
        let in_window_mean = tbs_field_cumulant(cfg, 1, 0.0, radius, &spec)?;
        let far_field_mean = tbs_field_cumulant(cfg, 1, radius, f64::INFINITY, &spec)?;
        let far_field_std = tbs_field_cumulant(cfg, 2, radius, f64::INFINITY, &spec)?.sqrt();
        if far_field_std >= TAIL_TOLERANCE * in_window_mean {
            return Err(SimError::TailTooLarge {
                radius,
                tail_std: far_field_std,
                in_window_mean,
            });
        }
        Ok(Self {
            radius,
            far_field_mean,
            far_field_std,
            in_window_mean,
        })
    }
}

fn uniform_disk(radius: f64, rng: &mut StreamRng) -> (f64, f64) {
    let rho = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    (rho * phi.cos(), rho * phi.sin())
}

/// N uniform ABSs on the disk at altitude `H` and a Poisson number of uniform
/// TBSs on a window of the given radius, both centred at the origin.
pub fn realize_network(
    cfg: &ValidatedConfig,
    window_radius: f64,
    rng: &mut StreamRng,
) -> Deployment {
    let abs_positions = (0..cfg.n_abs())
        .map(|_| {
            let (x, y) = uniform_disk(cfg.r_c(), rng);
            [x, y, cfg.big_h()]
        })
        .collect();
    let mean = cfg.lambda() * PI * window_radius * window_radius;
    let count = Poisson::new(mean)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    let tbs_positions = (0..count)
        .map(|_| {
            let (x, y) = uniform_disk(window_radius, rng);
            [x, y, 0.0]
        })
        .collect();
    Deployment {
        abs_positions,
        tbs_positions,
        region_radius: window_radius,
        far_field: 0.0,
    }
}

/// Nakagami parameters for the three link classes.
#[derive(Debug, Clone, Copy)]
pub struct FadingSet {
    abs: FadingParams,
    tbs_l: FadingParams,
    tbs_n: FadingParams,
}

impl FadingSet {
    pub fn for_config(cfg: &ValidatedConfig) -> Result<Self, ChannelError> {
        Ok(Self {
            abs: FadingParams::new(cfg.m(Tier::Abs, LinkState::Los), cfg.omega())?,
            tbs_l: FadingParams::new(cfg.m(Tier::Tbs, LinkState::Los), cfg.omega())?,
            tbs_n: FadingParams::new(cfg.m(Tier::Tbs, LinkState::Nlos), cfg.omega())?,
        })
    }

    pub fn get(&self, tier: Tier, state: LinkState) -> &FadingParams {
        match (tier, state) {
            (Tier::Abs, _) => &self.abs,
            (Tier::Tbs, LinkState::Los) => &self.tbs_l,
            (Tier::Tbs, LinkState::Nlos) => &self.tbs_n,
        }
    }
}

/// One station-to-user link in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub tier: Tier,
    /// Index into the tier's position list.
    pub index: usize,
    pub state: LinkState,
    pub dist: f64,
    /// Long-term amplitude `d^(-α/2)`.
    pub amp: f64,
    /// Fading power gain `|H|²`.
    pub gain: f64,
}

impl Link {
    fn new(
        tier: Tier,
        index: usize,
        z: f64,
        dz: f64,
        cfg: &ValidatedConfig,
        fad: &FadingSet,
        rng: &mut StreamRng,
    ) -> Link {
        let state = match tier {
            Tier::Abs => LinkState::Los,
            Tier::Tbs => {
                if rng.random::<f64>() < los_probability(z, dz, cfg.env()) {
                    LinkState::Los
                } else {
                    LinkState::Nlos
                }
            }
        };
        let d2 = z * z + dz * dz;
        let amp = d2.powf(-0.25 * cfg.alpha(tier, state));
        let gain = fad.get(tier, state).sample_power(rng);
        Link {
            tier,
            index,
            state,
            dist: d2.sqrt(),
            amp,
            gain,
        }
    }

    pub fn power(&self) -> f64 {
        self.gain * self.amp * self.amp
    }

    pub fn amplitude(&self) -> f64 {
        self.gain.sqrt() * self.amp
    }
}

/// Draws link states and fading for every station of `dep` seen from `user`.
/// ABS links first, then TBS links, each in position order.
pub fn draw_links(
    user: [f64; 3],
    dep: &Deployment,
    cfg: &ValidatedConfig,
    fad: &FadingSet,
    rng: &mut StreamRng,
) -> Vec<Link> {
    let mut links = Vec::with_capacity(dep.abs_positions.len() + dep.tbs_positions.len());
    for (tier, pts) in [
        (Tier::Abs, &dep.abs_positions),
        (Tier::Tbs, &dep.tbs_positions),
    ] {
        for (i, p) in pts.iter().enumerate() {
            let z = (p[0] - user[0]).hypot(p[1] - user[1]);
            let dz = (user[2] - p[2]).abs();
            links.push(Link::new(tier, i, z, dz, cfg, fad, rng));
        }
    }
    links
}

/// Same law as [`realize_network`] followed by [`draw_links`] for a user at
/// the window centre, generated from horizontal distances only.
fn draw_centered_links(
    cfg: &ValidatedConfig,
    window: &SimWindow,
    fad: &FadingSet,
    rng: &mut StreamRng,
    links: &mut Vec<Link>,
) {
    links.clear();
    let gap = cfg.gap();
    for i in 0..cfg.n_abs() {
        let z = cfg.r_c() * rng.random::<f64>().sqrt();
        links.push(Link::new(Tier::Abs, i, z, gap, cfg, fad, rng));
    }
    let mean = cfg.lambda() * PI * window.radius * window.radius;
    let count = Poisson::new(mean)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    for i in 0..count {
        let z = window.radius * rng.random::<f64>().sqrt();
        links.push(Link::new(Tier::Tbs, i, z, cfg.h(), cfg, fad, rng));
    }
}

/// Cooperating-set selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Three nearest stations of the tier with the larger long-term aggregate
    /// amplitude over its three nearest stations.
    Comp3SameTier,
    /// The single nearest station of either tier.
    SingleNearest,
    /// The three stations of either tier with the largest long-term power.
    StrongestThree,
}

impl Policy {
    pub const ALL: [Policy; 3] = [
        Policy::Comp3SameTier,
        Policy::SingleNearest,
        Policy::StrongestThree,
    ];
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "comp3-same-tier" | "comp3" => Ok(Policy::Comp3SameTier),
            "single-nearest" | "single" => Ok(Policy::SingleNearest),
            "strongest-three" | "strongest" => Ok(Policy::StrongestThree),
            _ => Err(format!(
                "unknown policy '{s}' (comp3-same-tier, single-nearest, strongest-three)"
            )),
        }
    }
}

/// Instantaneous SIR. The infinite case (no interference at all) is kept
/// apart so it is only ever compared against thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sir {
    Finite(f64),
    Infinite,
}

impl Sir {
    pub fn covers(&self, threshold: f64) -> bool {
        match *self {
            Sir::Finite(x) => x >= threshold,
            Sir::Infinite => true,
        }
    }

    pub fn db(&self) -> Option<f64> {
        match *self {
            Sir::Finite(x) => Some(10.0 * x.log10()),
            Sir::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationId {
    pub tier: Tier,
    pub index: usize,
}

/// Outcome at one user. `comp_set` is single-tier except under
/// [`Policy::StrongestThree`]; `tier` is the tier of the strongest member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirSample {
    pub sir: Sir,
    pub comp_set: Vec<StationId>,
    pub tier: Tier,
    pub zeta: LinkStateVector,
}

fn push_top3(top: &mut Vec<usize>, i: usize, better: impl Fn(usize, usize) -> bool) {
    let pos = top.iter().position(|&j| better(i, j)).unwrap_or(top.len());
    if pos < 3 {
        top.insert(pos, i);
        top.truncate(3);
    }
}

/// Indices of the cooperating set, best first.
pub fn select_set(links: &[Link], policy: Policy) -> Vec<usize> {
    let nearer = |i: usize, j: usize| links[i].dist < links[j].dist;
    match policy {
        Policy::Comp3SameTier => {
            let (mut a, mut t) = (Vec::with_capacity(4), Vec::with_capacity(4));
            for (i, l) in links.iter().enumerate() {
                match l.tier {
                    Tier::Abs => push_top3(&mut a, i, nearer),
                    Tier::Tbs => push_top3(&mut t, i, nearer),
                }
            }
            let v = |s: &[usize]| s.iter().map(|&i| links[i].amp).sum::<f64>();
            if v(&a) > v(&t) {
                a
            } else {
                t
            }
        }
        Policy::SingleNearest => {
            let best = (0..links.len()).min_by(|&i, &j| links[i].dist.total_cmp(&links[j].dist));
            best.into_iter().collect()
        }
        Policy::StrongestThree => {
            let mut top = Vec::with_capacity(4);
            for i in 0..links.len() {
                push_top3(&mut top, i, |i, j| links[i].amp > links[j].amp);
            }
            top
        }
    }
}

/// Coherent SIR of the set `set`: `(Σ_S |H| d^(-α/2))² / (Σ_{¬S} G d^(-α) + far_field)`.
pub fn sir_for_set(links: &[Link], set: &[usize], far_field: f64) -> Sir {
    let signal: f64 = set
        .iter()
        .map(|&i| links[i].amplitude())
        .sum::<f64>()
        .powi(2);
    let interference: f64 = links
        .iter()
        .enumerate()
        .filter(|(i, _)| !set.contains(i))
        .map(|(_, l)| l.power())
        .sum::<f64>()
        + far_field;
    if interference > 0.0 {
        Sir::Finite(signal / interference)
    } else {
        Sir::Infinite
    }
}

fn sample_from_set(links: &[Link], set: Vec<usize>, far_field: f64) -> SirSample {
    let sir = sir_for_set(links, &set, far_field);
    let mut states = [LinkState::Los; 3];
    for (k, &i) in set.iter().enumerate() {
        states[k] = links[i].state;
    }
    SirSample {
        sir,
        tier: set.first().map(|&i| links[i].tier).unwrap_or(Tier::Tbs),
        comp_set: set
            .iter()
            .map(|&i| StationId {
                tier: links[i].tier,
                index: links[i].index,
            })
            .collect(),
        zeta: LinkStateVector(states),
    }
}

/// SIR at `user` for one draw of link states and fading.
pub fn sir_at_user(
    user: [f64; 3],
    dep: &Deployment,
    policy: Policy,
    cfg: &ValidatedConfig,
    rng: &mut StreamRng,
) -> Result<SirSample, SimError> {
    let fad = FadingSet::for_config(cfg)?;
    let links = draw_links(user, dep, cfg, &fad, rng);
    Ok(sample_from_set(
        &links,
        select_set(&links, policy),
        dep.far_field,
    ))
}

/// Applies the operational altitude cap.
pub fn clamp_altitude(cfg: &ValidatedConfig) -> Result<ValidatedConfig, SimError> {
    if cfg.h() > MAX_USER_ALTITUDE {
        log::warn!(
            "user altitude {} m clamped to {} m",
            cfg.h(),
            MAX_USER_ALTITUDE
        );
        return Ok(cfg.modified(|c| c.h = MAX_USER_ALTITUDE)?);
    }
    Ok(cfg.clone())
}

#[derive(Debug, Clone, Default)]
struct Tally {
    served_abs: u64,
    covered_abs: Vec<u64>,
    covered_tbs: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Self {
            served_abs: 0,
            covered_abs: vec![0; n],
            covered_tbs: vec![0; n],
        }
    }

    fn add(&mut self, o: &Tally) {
        self.served_abs += o.served_abs;
        for k in 0..self.covered_abs.len() {
            self.covered_abs[k] += o.covered_abs[k];
            self.covered_tbs[k] += o.covered_tbs[k];
        }
    }
}

/// Empirical coverage for several thresholds and policies on shared
/// realizations. Result is indexed `[policy][threshold]`.
pub fn empirical_coverage_sweep(
    cfg: &ValidatedConfig,
    gammas_db: &[f64],
    policies: &[Policy],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<Vec<CoverageReport>>, SimError> {
    if trials < MIN_COVERAGE_TRIALS {
        return Err(SimError::TooFewTrials(trials));
    }
    let cfg = clamp_altitude(cfg)?;
    let window = SimWindow::for_config(&cfg)?;
    let fad = FadingSet::for_config(&cfg)?;
    let thresholds: Vec<f64> = gammas_db.iter().map(|&g| db_to_linear(g)).collect();
    let parts = chunked_map(trials, rng, |r, count| {
        let mut tallies: Vec<Tally> = policies
            .iter()
            .map(|_| Tally::new(thresholds.len()))
            .collect();
        let mut links = Vec::new();
        for _ in 0..count {
            draw_centered_links(&cfg, &window, &fad, r, &mut links);
            for (p, t) in policies.iter().zip(tallies.iter_mut()) {
                let s = sample_from_set(&links, select_set(&links, *p), window.far_field_mean);
                let is_abs = s.tier == Tier::Abs;
                t.served_abs += u64::from(is_abs);
                for (k, &g) in thresholds.iter().enumerate() {
                    if s.sir.covers(g) {
                        if is_abs {
                            t.covered_abs[k] += 1;
                        } else {
                            t.covered_tbs[k] += 1;
                        }
                    }
                }
            }
        }
        tallies
    });
    let n = trials as f64;
    let mut out = Vec::with_capacity(policies.len());
    for pi in 0..policies.len() {
        let mut tot = Tally::new(thresholds.len());
        for part in &parts {
            tot.add(&part[pi]);
        }
        let p_abs = tot.served_abs as f64 / n;
        let assoc = AssociationResult::new(
            p_abs,
            (p_abs * (1.0 - p_abs) / n).sqrt(),
            Method::MonteCarlo,
            trials,
        );
        let cond = |c: u64, served: u64| {
            if served == 0 {
                0.0
            } else {
                c as f64 / served as f64
            }
        };
        let served_tbs = trials as u64 - tot.served_abs;
        out.push(
            gammas_db
                .iter()
                .enumerate()
                .map(|(k, &g)| {
                    let covered = tot.covered_abs[k] + tot.covered_tbs[k];
                    let p_total = covered as f64 / n;
                    CoverageReport {
                        p_total,
                        p_abs_cond: cond(tot.covered_abs[k], tot.served_abs),
                        p_tbs_cond: cond(tot.covered_tbs[k], served_tbs),
                        assoc,
                        gamma_db: g,
                        method: Method::MonteCarlo,
                        trials,
                        std_error: (p_total * (1.0 - p_total) / n).sqrt(),
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Fraction of users with `SIR >= γ` under `policy`, one independent network
/// per trial with the user at the window centre.
pub fn empirical_coverage(
    cfg: &ValidatedConfig,
    gamma_db: f64,
    policy: Policy,
    trials: usize,
    rng: &RngStream,
) -> Result<CoverageReport, SimError> {
    let mut r = empirical_coverage_sweep(cfg, &[gamma_db], &[policy], trials, rng)?;
    Ok(r.remove(0).remove(0))
}

/// Interference at the window centre conditioned on the serving tier's third
/// distance `r3`: ABS interferers are `N - k` uniform points on the annulus
/// beyond `l2`, TBS interferers a PPP beyond `l1`, plus the far-field mean.
#[derive(Debug, Clone, Copy)]
pub struct InterferenceField {
    cfg_h: f64,
    gap: f64,
    r_c: f64,
    n_abs: usize,
    lambda: f64,
    window: SimWindow,
    fad: FadingSet,
    alpha: [f64; 3],
    env: crate::model::Environment,
}

impl InterferenceField {
    pub fn new(cfg: &ValidatedConfig) -> Result<Self, SimError> {
        Ok(Self {
            cfg_h: cfg.h(),
            gap: cfg.gap(),
            r_c: cfg.r_c(),
            n_abs: cfg.n_abs(),
            lambda: cfg.lambda(),
            window: SimWindow::for_config(cfg)?,
            fad: FadingSet::for_config(cfg)?,
            alpha: [
                cfg.alpha(Tier::Abs, LinkState::Los),
                cfg.alpha(Tier::Tbs, LinkState::Los),
                cfg.alpha(Tier::Tbs, LinkState::Nlos),
            ],
            env: cfg.env(),
        })
    }

    pub fn window(&self) -> &SimWindow {
        &self.window
    }

    /// Horizontal exclusion radii `(l1, l2)` and excluded ABS count `k`.
    pub fn exclusion(&self, serving: Tier, r3: f64) -> (f64, f64, usize) {
        match serving {
            Tier::Abs => (
                0.0,
                (r3 * r3 - self.gap * self.gap)
                    .max(0.0)
                    .sqrt()
                    .min(self.r_c),
                3,
            ),
            Tier::Tbs => ((r3 * r3 - self.cfg_h * self.cfg_h).max(0.0).sqrt(), 0.0, 0),
        }
    }

    pub fn sample(&self, serving: Tier, r3: f64, rng: &mut StreamRng) -> f64 {
        let (l1, l2, k) = self.exclusion(serving, r3);
        let mut total = 0.0;
        let (a2, rc2) = (l2 * l2, self.r_c * self.r_c);
        for _ in 0..self.n_abs - k {
            let z2 = a2 + (rc2 - a2) * rng.random::<f64>();
            let g = self.fad.get(Tier::Abs, LinkState::Los).sample_power(rng);
            total += g * (z2 + self.gap * self.gap).powf(-0.5 * self.alpha[0]);
        }
        let w = self.window.radius;
        if l1 < w {
            let (b2, w2) = (l1 * l1, w * w);
            let mean = self.lambda * PI * (w2 - b2);
            let count = Poisson::new(mean)
                .map(|p| p.sample(rng) as usize)
                .unwrap_or(0);
            let h2 = self.cfg_h * self.cfg_h;
            for _ in 0..count {
                let z2 = b2 + (w2 - b2) * rng.random::<f64>();
                let (state, alpha) =
                    if rng.random::<f64>() < los_probability(z2.sqrt(), self.cfg_h, self.env) {
                        (LinkState::Los, self.alpha[1])
                    } else {
                        (LinkState::Nlos, self.alpha[2])
                    };
                let g = self.fad.get(Tier::Tbs, state).sample_power(rng);
                total += g * (z2 + h2).powf(-0.5 * alpha);
            }
        }
        total + self.window.far_field_mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::cdf_abs_nth;
    use crate::model::NetworkConfig;
    use crate::numerics::stats::ks_statistic;

    fn cfg() -> ValidatedConfig {
        NetworkConfig::reference().validate().unwrap()
    }

    #[test]
    fn window_tail_is_small() {
        let c = cfg();
        let w = SimWindow::for_config(&c).unwrap();
        assert_eq!(w.radius, 3000.0);
        assert!(w.far_field_std < 0.01 * w.in_window_mean);
        assert!(w.far_field_mean > 0.0);
        assert!(matches!(
            SimWindow::with_radius(&c, 10.0),
            Err(SimError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn window_grows_and_divergence_detected() {
        let c = cfg()
            .modified(|c| {
                c.alpha_abs = 3.0;
                c.alpha_tbs_l = 3.0;
                c.h = 240.0;
            })
            .unwrap();
        let w = SimWindow::for_config(&c).unwrap();
        assert!(w.radius > 3000.0 && w.far_field_std < 0.01 * w.in_window_mean);
        let flat = cfg().modified(|c| c.alpha_tbs_n = 2.0).unwrap();
        assert!(matches!(
            SimWindow::for_config(&flat),
            Err(SimError::DivergentInterference { .. })
        ));
    }

    #[test]
    fn tbs_count_mean() {
        let c = cfg();
        let w = 1500.0;
        let mut r = RngStream::new(1, 0).rng();
        let n = 10_000;
        let total: usize = (0..n)
            .map(|_| realize_network(&c, w, &mut r).tbs_positions.len())
            .sum();
        let expect = c.lambda() * PI * w * w;
        assert!((total as f64 / n as f64 / expect - 1.0).abs() < 0.01);
    }

    #[test]
    fn abs_inside_disk_and_nearest_law() {
        let c = cfg();
        let mut r = RngStream::new(2, 0).rng();
        let mut nearest = Vec::new();
        for _ in 0..20_000 {
            let d = realize_network(&c, 3000.0, &mut r);
            let mut best = f64::INFINITY;
            for p in &d.abs_positions {
                assert!(p[0].hypot(p[1]) <= c.r_c());
                best = best.min((p[0] * p[0] + p[1] * p[1] + c.gap() * c.gap()).sqrt());
            }
            nearest.push(best);
        }
        let ks = ks_statistic(&nearest, |x| cdf_abs_nth(x, 1, &c).unwrap());
        assert!(ks < 0.01, "ks={ks}");
    }

    #[test]
    fn single_station_is_infinite() {
        let c = cfg();
        let dep = Deployment {
            abs_positions: vec![],
            tbs_positions: vec![[0.0, 0.0, 0.0]],
            region_radius: 100.0,
            far_field: 0.0,
        };
        let mut r = RngStream::new(3, 0).rng();
        for p in Policy::ALL {
            let s = sir_at_user([10.0, 0.0, c.h()], &dep, p, &c, &mut r).unwrap();
            assert_eq!(s.sir, Sir::Infinite);
            assert!(s.sir.covers(1e300));
            assert_eq!(s.comp_set.len(), 1);
        }
    }

    #[test]
    fn comp3_set_is_single_tier() {
        let c = cfg();
        let mut r = RngStream::new(4, 0).rng();
        for _ in 0..200 {
            let dep = realize_network(&c, 3000.0, &mut r);
            let s =
                sir_at_user([0.0, 0.0, c.h()], &dep, Policy::Comp3SameTier, &c, &mut r).unwrap();
            assert_eq!(s.comp_set.len(), 3);
            assert!(s.comp_set.iter().all(|x| x.tier == s.tier));
            assert!(matches!(s.sir, Sir::Finite(x) if x > 0.0));
        }
    }

    #[test]
    fn coverage_basics() {
        let c = cfg();
        let rng = RngStream::new(5, 0);
        let r =
            empirical_coverage_sweep(&c, &[-40.0, 0.0, 10.0], &Policy::ALL, 4000, &rng).unwrap();
        for row in &r {
            assert!(row[0].p_total > 0.99);
            assert!(row[0].p_total >= row[1].p_total && row[1].p_total >= row[2].p_total);
            for rep in row {
                let recon = rep.p_abs_cond * rep.assoc.p_abs + rep.p_tbs_cond * rep.assoc.p_tbs;
                assert!((recon - rep.p_total).abs() < 1e-12);
            }
        }
        assert!(empirical_coverage(&c, 0.0, Policy::Comp3SameTier, 10, &rng).is_err());
    }

    #[test]
    fn clamps_altitude() {
        let c = cfg().modified(|c| c.h = 310.0).unwrap();
        assert_eq!(clamp_altitude(&c).unwrap().h(), 300.0);
    }

    #[test]
    fn interference_mean_matches_cumulant() {
        let c = cfg();
        let f = InterferenceField::new(&c).unwrap();
        let mut r = RngStream::new(6, 0).rng();
        let n = 20_000;
        let r3 = 250.0;
        let mean: f64 = (0..n).map(|_| f.sample(Tier::Tbs, r3, &mut r)).sum::<f64>() / n as f64;
        let (l1, _, _) = f.exclusion(Tier::Tbs, r3);
        let tbs = tbs_field_cumulant(&c, 1, l1, f64::INFINITY, &QuadratureSpec::default()).unwrap();
        // all N ABSs uniform on the disk
        let abs = integrate_1d(
            |z| 2.0 * z / (c.r_c() * c.r_c()) * (z * z + c.gap() * c.gap()).powf(-1.0),
            0.0,
            c.r_c(),
            &QuadratureSpec::default(),
        )
        .unwrap()
            * c.n_abs() as f64;
        let expect = tbs + abs;
        assert!(
            (mean / expect - 1.0).abs() < 0.02,
            "mean={mean} expect={expect}"
        );
    }
}
