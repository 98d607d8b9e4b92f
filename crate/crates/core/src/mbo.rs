//! Graph MBO: diffuse the indicator with a heat operator, threshold at ½.

use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::front::FrontDescriptor;
use crate::manifold::PointCloud;
use crate::spectral::HeatOperator;

/// Two-class labelling `χ: V → {0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClusterState {
    labels: Vec<u8>,
}

impl ClusterState {
    pub fn from_labels(labels: Vec<u8>) -> Result<Self> {
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(invalid(format!("label {} at node {i} is not 0 or 1", labels[i])));
        }
        Ok(Self { labels })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        Self {
            labels: (0..n).map(|i| f(i) as u8).collect(),
        }
    }

    pub fn ones(n: usize) -> Self {
        Self { labels: vec![1; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn get(&self, node: usize) -> u8 {
        self.labels[node]
    }

    pub fn ones_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| l as f64).collect()
    }

    /// `𝟙 − χ`
    pub fn complement(&self) -> Self {
        Self {
            labels: self.labels.iter().map(|&l| 1 - l).collect(),
        }
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.labels.iter().zip(&other.labels).all(|(a, b)| a <= b)
    }

    pub fn changed_nodes(&self, other: &Self) -> usize {
        self.labels.iter().zip(&other.labels).filter(|(a, b)| a != b).count()
    }

    /// `{u ≥ ½}`, the tie going to label 1.
    pub fn threshold(u: &[f64]) -> Self {
        Self {
            labels: u.iter().map(|&v| (v >= 0.5) as u8).collect(),
        }
    }
}

/// `χ(x_i) = 1` iff the signed distance of `x_i` to the region is positive.
pub fn initial_state_from_region(cloud: &PointCloud, region: &FrontDescriptor) -> ClusterState {
    ClusterState::from_fn(cloud.len(), |i| region.signed_distance(cloud.point(i)) > 0.0)
}

/// One step: `u = S(h, χ)`, `χ' = 𝟙{u ≥ ½}`.
pub fn mbo_step(handle: &HeatOperator, h: f64, state: &ClusterState) -> Result<ClusterState> {
    Ok(mbo_step_with_field(handle, h, state)?.0)
}

/// As [`mbo_step`], also returning the diffused field `u`.
pub fn mbo_step_with_field(
    handle: &HeatOperator,
    h: f64,
    state: &ClusterState,
) -> Result<(ClusterState, Vec<f64>)> {
    if !(h > 0.0) {
        return Err(invalid(format!("step size must be positive, got {h}")));
    }
    let u = handle.apply(h, &state.to_f64())?;
    Ok((ClusterState::threshold(&u), u))
}

#[derive(Clone, Debug)]
pub struct MboTrace {
    pub states: Vec<ClusterState>,
    pub h: f64,
    /// `E_G^h(χ^l)` per state; only for the full heat operator.
    pub energies: Option<Vec<f64>>,
    /// First `l` with `χ^{l+1} = χ^l`.
    pub pinned_at: Option<usize>,
    pub operator: String,
}

impl MboTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.h
    }

    pub fn ones_counts(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.ones_count()).collect()
    }

    /// First time with no node labelled 1.
    pub fn extinction_time(&self) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s.ones_count() == 0)
            .map(|l| self.time(l))
    }

    /// Right-continuous piecewise-constant interpolation `χ^{⌊t/h⌋}(node)`.
    pub fn interpolate(&self, t: f64, node: usize) -> Result<u8> {
        Ok(self.state_at(t)?.get(node))
    }

    pub fn state_at(&self, t: f64) -> Result<&ClusterState> {
        let end = self.len() as f64 * self.h;
        if !(t >= 0.0 && t < end) {
            return Err(Error::TimeOutOfRange { t, end });
        }
        // a time within rounding of a grid point `lh` belongs to step l
        let x = t / self.h;
        let r = x.round();
        let l = if (x - r).abs() <= 8.0 * f64::EPSILON * r.max(1.0) {
            r as usize
        } else {
            x.floor() as usize
        };
        Ok(&self.states[l.min(self.len() - 1)])
    }

    /// Largest energy increase between consecutive states.
    pub fn max_energy_increase(&self) -> Option<f64> {
        self.energies.as_ref().map(|e| {
            e.windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }

    /// `step,time,ones_count,energy,changed_nodes`
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["step", "time", "ones_count", "energy", "changed_nodes"])?;
        for (l, s) in self.states.iter().enumerate() {
            let energy = self
                .energies
                .as_ref()
                .map(|e| format!("{:?}", e[l]))
                .unwrap_or_default();
            let changed = if l == 0 {
                0
            } else {
                s.changed_nodes(&self.states[l - 1])
            };
            w.write_record([
                l.to_string(),
                format!("{:?}", self.time(l)),
                s.ones_count().to_string(),
                energy,
                changed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Full label dump `step,node,label`.
    pub fn write_labels_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "step,node,label")?;
        for (l, s) in self.states.iter().enumerate() {
            for (i, v) in s.labels().iter().enumerate() {
                writeln!(f, "{l},{i},{v}")?;
            }
        }
        f.flush()?;
        Ok(())
    }
}

/// Iterates [`mbo_step`] up to `max_steps` times. Energies are recorded when
/// the operator is the full heat semigroup.
pub fn run_mbo(
    handle: &HeatOperator,
    h: f64,
    chi0: ClusterState,
    max_steps: usize,
    stop_on_fixpoint: bool,
) -> Result<MboTrace> {
    if max_steps == 0 {
        return Err(invalid("max_steps must be at least 1"));
    }
    if chi0.len() != handle.len() {
        return Err(invalid(format!(
            "initial state has {} nodes, operator has {}",
            chi0.len(),
            handle.len()
        )));
    }
    let degrees = handle.full_degrees();
    let mut energies = degrees.map(|_| Vec::new());
    let mut states = vec![chi0];
    let mut pinned_at = None;
    for l in 0..max_steps {
        let cur = &states[l];
        let (next, u) = mbo_step_with_field(handle, h, cur)?;
        if let (Some(e), Some(d)) = (energies.as_mut(), degrees) {
            e.push(energy_from_field(d, h, &cur.to_f64(), &u));
        }
        let fixed = next == *cur;
        if fixed && pinned_at.is_none() {
            pinned_at = Some(l);
        }
        states.push(next);
        if fixed && stop_on_fixpoint {
            break;
        }
    }
    if let (Some(e), Some(d)) = (energies.as_mut(), degrees) {
        let last = states.last().unwrap();
        if states.len() >= 2 && *last == states[states.len() - 2] {
            let prev = *e.last().unwrap();
            e.push(prev);
        } else {
            let v = last.to_f64();
            let u = handle.apply(h, &v)?;
            e.push(energy_from_field(d, h, &v, &u));
        }
    }
    Ok(MboTrace {
        states,
        h,
        energies,
        pinned_at,
        operator: handle.describe(),
    })
}

fn energy_from_field(degrees: &[f64], h: f64, v: &[f64], u: &[f64]) -> f64 {
    let n = degrees.len() as f64;
    let s: f64 = degrees
        .iter()
        .zip(v)
        .zip(u)
        .map(|((d, vi), ui)| d * (1.0 - vi) * ui)
        .sum();
    s / (n * h.sqrt())
}

/// `E_G^h(v) = h^{-1/2} ⟨𝟙 − v, e^{-hΔ} v⟩_V` for `0 ≤ v ≤ 1`.
pub fn thresholding_energy(handle: &HeatOperator, h: f64, v: &[f64]) -> Result<f64> {
    let degrees = handle.full_degrees().ok_or_else(|| {
        Error::Unsupported("the thresholding energy is defined through the full heat operator".into())
    })?;
    if let Some(i) = v.iter().position(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::OutOfUnitInterval { node: i, value: v[i] });
    }
    let u = handle.apply(h, v)?;
    Ok(energy_from_field(degrees, h, v, &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{KernelProfile, WeightedGraph};
    use crate::manifold::{DensitySpec, ManifoldSpec};

    /// Two triangles joined by a single weak edge.
    fn dumbbell() -> WeightedGraph {
        let m = ManifoldSpec::unit_torus();
        let coords: Vec<f64> = (0..6).flat_map(|i| [0.1 * i as f64, 0.5]).collect();
        let cloud = PointCloud::from_coords(m, DensitySpec::uniform(m), 0, coords).unwrap();
        let edges = vec![
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (2, 3, 0.1),
            (3, 4, 1.0),
            (3, 5, 1.0),
            (4, 5, 1.0),
        ];
        WeightedGraph::from_upper_triplets(cloud, 1.0, KernelProfile::Indicator, edges).unwrap()
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = dumbbell();
        let op = HeatOperator::dense(&g).unwrap();
        assert_eq!(mbo_step(&op, 0.3, &ClusterState::ones(6)).unwrap(), ClusterState::ones(6));
        assert_eq!(mbo_step(&op, 0.3, &ClusterState::zeros(6)).unwrap(), ClusterState::zeros(6));
        let t = run_mbo(&op, 0.3, ClusterState::ones(6), 10, true).unwrap();
        assert_eq!(t.pinned_at, Some(0));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn dumbbell_small_and_large_steps() {
        let g = dumbbell();
        let op = HeatOperator::dense(&g).unwrap();
        let left = ClusterState::from_labels(vec![1, 1, 1, 0, 0, 0]).unwrap();
        assert_eq!(mbo_step(&op, 0.05, &left).unwrap(), left);
        // majority: four of six nodes labelled 1
        let lopsided = ClusterState::from_labels(vec![1, 1, 1, 1, 0, 0]).unwrap();
        let out = mbo_step(&op, 1e3, &lopsided).unwrap();
        assert_eq!(out, ClusterState::ones(6));
    }

    #[test]
    fn energy_of_constants_vanishes() {
        let g = dumbbell();
        let op = HeatOperator::dense(&g).unwrap();
        assert_eq!(thresholding_energy(&op, 0.2, &[1.0; 6]).unwrap(), 0.0);
        assert_eq!(thresholding_energy(&op, 0.2, &[0.0; 6]).unwrap(), 0.0);
        assert!(matches!(
            thresholding_energy(&op, 0.2, &[0.0, 0.0, 1.5, 0.0, 0.0, 0.0]),
            Err(Error::OutOfUnitInterval { node: 2, .. })
        ));
    }

    #[test]
    fn interpolation_is_right_continuous() {
        let states = (0..4).map(|l| ClusterState::from_fn(3, |i| i < l)).collect();
        let t = MboTrace {
            states,
            h: 0.1,
            energies: None,
            pinned_at: None,
            operator: "test".into(),
        };
        assert_eq!(t.state_at(0.05).unwrap().ones_count(), 0);
        assert_eq!(t.state_at(0.3).unwrap().ones_count(), 3);
        assert_eq!(t.state_at(0.2).unwrap().ones_count(), 2);
        assert_eq!(t.state_at(0.2 - 1e-12).unwrap().ones_count(), 1);
        assert!(t.state_at(0.4).is_err());
        assert!(t.state_at(-0.01).is_err());
    }

    #[test]
    fn labels_must_be_binary() {
        assert!(ClusterState::from_labels(vec![0, 2]).is_err());
    }

    #[test]
    fn trace_csv_has_expected_columns() {
        let g = dumbbell();
        let op = HeatOperator::dense(&g).unwrap();
        let left = ClusterState::from_labels(vec![1, 1, 1, 0, 0, 0]).unwrap();
        let t = run_mbo(&op, 0.05, left, 3, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.csv");
        t.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("step,time,ones_count,energy,changed_nodes\n"));
        assert_eq!(text.lines().count(), 5);
        let p = dir.path().join("labels.csv");
        t.write_labels_csv(&p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 1 + 4 * 6);
    }
}
