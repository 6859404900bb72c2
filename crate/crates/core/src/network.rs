//! Network state for one drop: antenna budget split, idle-mode activation
//! statistics, strongest-link association, and per-cell scheduling with
//! pilot assignment.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::Error;
use crate::geometry::{toroidal_distance_2d, PointGrid, PointPattern, Window};
use crate::propagation::{dist_3d, LinkState, PathLossModel, PathLossSegment};

/// A fixed total antenna budget per km^2 split between BS density and
/// antennas per BS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentBudget {
    pub antenna_density_km2: f64,
    pub bs_density_km2: f64,
    pub antennas_per_bs: usize,
}

impl DeploymentBudget {
    /// Split the budget by antennas per BS; the BS density follows and may be
    /// fractional.
    pub fn from_antennas_per_bs(antenna_density_km2: f64, m: usize) -> Result<Self, Error> {
        if !(antenna_density_km2 > 0.0) || !antenna_density_km2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "antenna density must be positive and finite, got {antenna_density_km2}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("antennas per BS must be at least 1".into()));
        }
        Ok(DeploymentBudget {
            antenna_density_km2,
            bs_density_km2: antenna_density_km2 / m as f64,
            antennas_per_bs: m,
        })
    }

    /// Split the budget by BS density; the antenna count per BS must come out
    /// a positive integer.
    pub fn from_bs_density(antenna_density_km2: f64, bs_density_km2: f64) -> Result<Self, Error> {
        if !(antenna_density_km2 > 0.0) || !antenna_density_km2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "antenna density must be positive and finite, got {antenna_density_km2}"
            )));
        }
        if !(bs_density_km2 > 0.0) || !bs_density_km2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "BS density must be positive and finite, got {bs_density_km2}"
            )));
        }
        let m = antenna_density_km2 / bs_density_km2;
        if m < 1.0 - 1e-9 || (m - m.round()).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "antenna density {antenna_density_km2} /km^2 does not split evenly over \
                 {bs_density_km2} BSs/km^2 (antennas per BS = {m} is not a positive integer)"
            )));
        }
        Ok(DeploymentBudget {
            antenna_density_km2,
            bs_density_km2,
            antennas_per_bs: m.round() as usize,
        })
    }
}

/// Negative-binomial cell-load model: the UE count of a random cell mixes a
/// Poisson over the Gamma(`q`) fit of random cell areas, giving
/// `NB(q, rho/(rho + q lambda))`. `q = 3.5` is the classic fit for
/// Poisson-Voronoi cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub bs_density_km2: f64,
    pub ue_density_km2: f64,
    pub q: f64,
}

impl NbModel {
    pub fn new(bs_density_km2: f64, ue_density_km2: f64, q: f64) -> Result<Self, Error> {
        if !(bs_density_km2 > 0.0) || !bs_density_km2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "BS density must be positive and finite, got {bs_density_km2}"
            )));
        }
        if !(ue_density_km2 >= 0.0) || !ue_density_km2.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "UE density must be non-negative and finite, got {ue_density_km2}"
            )));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidConfig(format!("load-model q must be positive, got {q}")));
        }
        Ok(NbModel { bs_density_km2, ue_density_km2, q })
    }

    /// Density of BSs serving at least one UE:
    /// `lambda * (1 - (1 + rho/(q lambda))^-q)`. Tends to `rho` when BSs are
    /// plentiful and saturates at `lambda` when UEs are.
    pub fn active_bs_density(&self) -> f64 {
        let (lam, rho, q) = (self.bs_density_km2, self.ue_density_km2, self.q);
        lam * (1.0 - (1.0 + rho / (q * lam)).powf(-q))
    }

    fn success_prob(&self) -> f64 {
        self.ue_density_km2 / (self.ue_density_km2 + self.q * self.bs_density_km2)
    }

    /// P(K = k): probability a random cell has exactly `k` attached UEs.
    pub fn pmf(&self, k: u64) -> f64 {
        let p = self.success_prob();
        if p == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let (kf, q) = (k as f64, self.q);
        (ln_gamma(kf + q) - ln_gamma(kf + 1.0) - ln_gamma(q)
            + kf * p.ln()
            + q * (1.0 - p).ln())
        .exp()
    }

    /// PMF of the scheduled count of an active cell: the load conditioned on
    /// being non-zero, with all mass at `k >= k_u` collapsed onto `k_u`
    /// (cells never schedule more than the cap).
    pub fn truncated_pmf(&self, k: u64, k_u: usize) -> Result<f64, Error> {
        if k_u == 0 {
            return Err(Error::Domain("scheduling cap must be at least 1".into()));
        }
        if k == 0 || k > k_u as u64 {
            return Err(Error::Domain(format!(
                "truncated load PMF is supported on 1..={k_u}, got {k}"
            )));
        }
        let p0 = self.pmf(0);
        let denom = 1.0 - p0;
        if denom <= 0.0 {
            return Err(Error::Domain(
                "truncated load PMF undefined: no cell is ever loaded (rho = 0)".into(),
            ));
        }
        if k < k_u as u64 {
            Ok(self.pmf(k) / denom)
        } else {
            let below: f64 = (0..k_u as u64).map(|j| self.pmf(j)).sum();
            Ok(((1.0 - below) / denom).max(0.0))
        }
    }
}

/// Streams a BS may serve at once: a quarter of its antennas, at most the
/// pilot budget, at least one.
pub fn scheduling_cap(antennas_per_bs: usize, k_t: usize) -> usize {
    (antennas_per_bs / 4).clamp(1, k_t)
}

/// Association outcome for one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeAssociation {
    pub serving_bs: u32,
    pub serving_link: LinkState,
    /// Path gains of every candidate link the scan materialized (serving one
    /// included), sorted by BS index. Reused downstream so a pair's LoS draw
    /// happens at most once per drop.
    pub examined: Vec<(u32, f64)>,
}

impl UeAssociation {
    /// Materialized gain to `bs`, if the association scan drew that pair.
    pub fn gain_to(&self, bs: u32) -> Option<f64> {
        self.examined
            .binary_search_by_key(&bs, |&(b, _)| b)
            .ok()
            .map(|i| self.examined[i].1)
    }
}

/// `(gain, dist, index)` ordering: strongest gain wins, ties go to the closer
/// link, then to the lower BS index.
fn beats(cand: (f64, f64, u32), best: (f64, f64, u32)) -> bool {
    if cand.0 != best.0 {
        return cand.0 > best.0;
    }
    if cand.1 != best.1 {
        return cand.1 < best.1;
    }
    cand.2 < best.2
}

/// Serving BS among fully materialized candidate links (position in `links`).
pub fn select_serving(links: &[(u32, LinkState)]) -> Option<usize> {
    let mut best: Option<(usize, (f64, f64, u32))> = None;
    for (pos, &(bs, ref link)) in links.iter().enumerate() {
        let key = (link.gain, link.dist_2d_km, bs);
        if best.map_or(true, |(_, b)| beats(key, b)) {
            best = Some((pos, key));
        }
    }
    best.map(|(pos, _)| pos)
}

/// Associate every UE to the BS with the strongest materialized link.
///
/// Candidates are scanned outward in grid rings and links are drawn lazily
/// through `materialize(bs, ue, planar_dist)`. The scan stops once no
/// unexamined BS could beat the current best even with the most favorable
/// branch, so the winner is identical to a full scan over all pairs while
/// drawing only a small neighborhood. Links never examined are never drawn,
/// which leaves the joint distribution untouched.
pub fn associate_with(
    bs: &PointPattern,
    ues: &PointPattern,
    model: &PathLossModel,
    window: &Window,
    mut materialize: impl FnMut(u32, u32, f64) -> LinkState,
) -> Result<Vec<UeAssociation>, Error> {
    if bs.is_empty() {
        return Err(Error::InvalidConfig("cannot associate UEs: no BSs in the window".into()));
    }
    let grid = PointGrid::build(bs, window);
    let mut out = Vec::with_capacity(ues.len());
    let mut members: Vec<u32> = Vec::new();
    for (ue_idx, &ue_pos) in ues.points.iter().enumerate() {
        let mut best: Option<(f64, f64, u32)> = None;
        let mut best_link = None;
        let mut examined: Vec<(u32, f64)> = Vec::new();
        for ring in 0..=grid.max_ring() {
            if let Some((best_gain, _, _)) = best {
                let reachable = model
                    .gain_bound_beyond(dist_3d(grid.ring_min_dist_km(ring), model.height_diff_km));
                if reachable < best_gain {
                    break;
                }
            }
            grid.ring_members(&ue_pos, ring, &mut members);
            for &bs_idx in &members {
                let r = toroidal_distance_2d(ue_pos, bs.points[bs_idx as usize], window);
                let link = materialize(bs_idx, ue_idx as u32, r);
                examined.push((bs_idx, link.gain));
                let key = (link.gain, link.dist_2d_km, bs_idx);
                if best.map_or(true, |b| beats(key, b)) {
                    best = Some(key);
                    best_link = Some((bs_idx, link));
                }
            }
        }
        let (serving_bs, serving_link) =
            best_link.expect("window has BSs, so some candidate was examined");
        examined.sort_unstable_by_key(|&(b, _)| b);
        out.push(UeAssociation { serving_bs, serving_link, examined });
    }
    Ok(out)
}

/// Specialized scan for single-segment models. Per branch the gain is a pure
/// power law, so "no unexamined candidate can beat or tie the best" inverts
/// to a reach radius around the UE; candidates outside it are skipped before
/// any randomness is spent on them and their links stay undrawn. Winner and
/// tie-breaking match [`associate_with`] given the same per-pair LoS draws,
/// but the examined set is smaller, so downstream consumers see more lazy
/// draws (each pair is still drawn at most once per drop).
fn associate_power_law(
    bs: &PointPattern,
    ues: &PointPattern,
    seg: PathLossSegment,
    height_diff_km: f64,
    window: &Window,
    mut los_coin: impl FnMut(u32, u32, f64) -> bool,
) -> Result<Vec<UeAssociation>, Error> {
    if bs.is_empty() {
        return Err(Error::InvalidConfig("cannot associate UEs: no BSs in the window".into()));
    }
    let grid = PointGrid::build(bs, window);
    let h_sq = height_diff_km * height_diff_km;
    let mut out = Vec::with_capacity(ues.len());
    let mut members: Vec<u32> = Vec::new();
    for (ue_idx, &ue_pos) in ues.points.iter().enumerate() {
        let mut best: Option<(f64, f64, u32)> = None;
        let mut best_link = None;
        // Squared 3-D distance out to which some branch can still reach the
        // best gain; beyond it a candidate loses whatever it draws.
        let mut reach_sq = f64::INFINITY;
        let mut examined: Vec<(u32, f64)> = Vec::new();
        for ring in 0..=grid.max_ring() {
            let ring_r = grid.ring_min_dist_km(ring);
            if ring_r * ring_r + h_sq > reach_sq {
                break;
            }
            grid.ring_members(&ue_pos, ring, &mut members);
            for &bs_idx in &members {
                let r = toroidal_distance_2d(ue_pos, bs.points[bs_idx as usize], window);
                let w_sq = r * r + h_sq;
                if w_sq > reach_sq {
                    continue;
                }
                let w = w_sq.sqrt();
                let is_los = los_coin(bs_idx, ue_idx as u32, w);
                let gain = seg.gain(w, is_los);
                examined.push((bs_idx, gain));
                let key = (gain, r, bs_idx);
                if best.map_or(true, |b| beats(key, b)) {
                    best = Some(key);
                    best_link =
                        Some((bs_idx, LinkState { dist_2d_km: r, dist_3d_km: w, is_los, gain }));
                    reach_sq = reach_bound_sq(&seg, gain);
                }
            }
        }
        let (serving_bs, serving_link) =
            best_link.expect("window has BSs, so some candidate was examined");
        examined.sort_unstable_by_key(|&(b, _)| b);
        out.push(UeAssociation { serving_bs, serving_link, examined });
    }
    Ok(out)
}

/// Squared 3-D distance out to which some branch of `seg` can still reach
/// `gain`, inflated by a hair so float rounding never skips a candidate the
/// exact bound would keep.
fn reach_bound_sq(seg: &PathLossSegment, gain: f64) -> f64 {
    let radius = |a: f64, alpha: f64| -> f64 {
        if alpha == 0.0 {
            // Constant branch: reaches `gain` everywhere or nowhere.
            if a >= gain {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (a / gain).powf(1.0 / alpha)
        }
    };
    let r = radius(seg.a_los, seg.alpha_los).max(radius(seg.a_nlos, seg.alpha_nlos));
    (r * r) * (1.0 + 1e-9)
}

/// [`associate_with`] drawing fresh link states from the model.
pub fn associate(
    bs: &PointPattern,
    ues: &PointPattern,
    model: &PathLossModel,
    window: &Window,
    rng: &mut impl Rng,
) -> Result<Vec<UeAssociation>, Error> {
    if let [seg] = model.segments.as_slice() {
        let seg = *seg;
        associate_power_law(bs, ues, seg, model.height_diff_km, window, |_, _, w| {
            rng.random::<f64>() < model.los.probability(w)
        })
    } else {
        associate_with(bs, ues, model, window, |_, _, r| model.materialize_link(r, rng))
    }
}

/// Per-BS downlink state for one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub bs_index: u32,
    /// UEs attached by association, in UE index order.
    pub attached_ues: Vec<u32>,
    /// Scheduled subset, in UE index order. Empty for idle cells.
    pub scheduled_ues: Vec<u32>,
    /// Pilot index per scheduled UE (parallel to `scheduled_ues`), distinct
    /// within the cell, drawn uniformly from `0..k_t`.
    pub pilots: Vec<u16>,
    /// Per-stream transmit power, `p_tx / scheduled count`; 0 while idle.
    pub per_ue_power_w: f64,
}

impl CellState {
    pub fn is_active(&self) -> bool {
        !self.attached_ues.is_empty()
    }

    pub fn k_hat(&self) -> usize {
        self.scheduled_ues.len()
    }
}

/// Group attached UEs per BS, schedule a uniform subset up to the cap, assign
/// distinct pilots, and split transmit power evenly over the streams.
pub fn build_cells(
    n_bs: usize,
    assoc: &[UeAssociation],
    k_u: usize,
    k_t: usize,
    p_tx_w: f64,
    rng: &mut impl Rng,
) -> Result<Vec<CellState>, Error> {
    if k_u == 0 || k_u > k_t {
        return Err(Error::InvalidConfig(format!(
            "scheduling cap {k_u} must lie in 1..=pilot budget {k_t}"
        )));
    }
    let mut attached: Vec<Vec<u32>> = vec![Vec::new(); n_bs];
    for (ue, a) in assoc.iter().enumerate() {
        attached[a.serving_bs as usize].push(ue as u32);
    }
    let mut cells = Vec::with_capacity(n_bs);
    for (bs_index, attached_ues) in attached.into_iter().enumerate() {
        if attached_ues.is_empty() {
            cells.push(CellState {
                bs_index: bs_index as u32,
                attached_ues,
                scheduled_ues: Vec::new(),
                pilots: Vec::new(),
                per_ue_power_w: 0.0,
            });
            continue;
        }
        let k_hat = attached_ues.len().min(k_u);
        let mut scheduled_ues = if k_hat == attached_ues.len() {
            attached_ues.clone()
        } else {
            let picks = rand::seq::index::sample(rng, attached_ues.len(), k_hat);
            let mut s: Vec<u32> = picks.iter().map(|i| attached_ues[i]).collect();
            s.sort_unstable();
            s
        };
        scheduled_ues.shrink_to_fit();
        let pilots: Vec<u16> =
            rand::seq::index::sample(rng, k_t, k_hat).iter().map(|p| p as u16).collect();
        cells.push(CellState {
            bs_index: bs_index as u32,
            attached_ues,
            scheduled_ues,
            pilots,
            per_ue_power_w: p_tx_w / k_hat as f64,
        });
    }
    Ok(cells)
}
