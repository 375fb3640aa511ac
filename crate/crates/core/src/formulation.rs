//! Compilation of a measured network into a standard-form conic program.
//!
//! The lifted variable is `Z = [[I₂, Xᵀ], [X, Y]]` of order `2 + n`, with
//! sensor `j` occupying row/column `2 + j`. Only the entries of `Z` that
//! appear in some constraint become decision variables:
//!
//! | slots | entries |
//! |-------|---------|
//! | 0..3 | the top-left block `Z₀₀, Z₀₁, Z₁₁`, pinned to `I₂` by equality rows |
//! | 3..3+2n | sensor coordinates `Z[0, 2+j], Z[1, 2+j]` for every sensor |
//! | .. | `Y_jj` for every sensor incident to an edge, ascending |
//! | .. | `Y_ij` for every sensor edge, in edge order |
//! | .. | `α⁺, α⁻` for every edge, in combined edge order |
//!
//! Rows are laid out as one zero cone (3 base rows, one row per sensor edge,
//! one row per anchor edge), one nonnegative cone tying each `α` to its slack,
//! then one PSD block per sensor edge over `Z` indices `{0, 1, 2+i, 2+j}`
//! (and, optionally, 3×3 blocks over `{0, 1, 2+j}` for sensors that only see
//! anchors). A block's slack is `svec(Z_block + p·I)`.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cone::{self, Cone};
use crate::error::FormulationError;
use crate::network::{Edge, MeasuredNetwork, Network};
use crate::sparse::CscMatrix;

/// Number of pinned top-left entries of `Z`.
pub const FIXED_ENTRIES: usize = 3;

/// `min cᵀy  s.t.  Ay + s = b,  s ∈ K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub objective: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    /// Checks that the dimensions of `c`, `A`, `b` and the cones agree.
    pub fn check_dimensions(&self) -> Result<(), String> {
        if self.objective.len() != self.a.ncols() {
            return Err(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.a.ncols()
            ));
        }
        if self.b.len() != self.a.nrows() {
            return Err(format!(
                "b has {} entries for {} rows",
                self.b.len(),
                self.a.nrows()
            ));
        }
        let cone_rows = cone::total_rows(&self.cones);
        if cone_rows != self.a.nrows() {
            return Err(format!(
                "cones cover {cone_rows} rows but A has {}",
                self.a.nrows()
            ));
        }
        Ok(())
    }

    /// The slack `s = b - Ay` implied by a decision vector.
    pub fn implied_slack(&self, y: &[f64]) -> Vec<f64> {
        let ay = self.a.mul(y);
        self.b.iter().zip(ay).map(|(b, ay)| b - ay).collect()
    }

    /// Rows covered by each cone, in order.
    pub fn cone_ranges(&self) -> Vec<(Cone, Range<usize>)> {
        let mut off = 0;
        self.cones
            .iter()
            .map(|&c| {
                let r = off..off + c.rows();
                off = r.end;
                (c, r)
            })
            .collect()
    }
}

/// Map between entries of `Z` and decision-vector slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ZLayout {
    num_sensors: usize,
    entries: Vec<(usize, usize)>,
    index: BTreeMap<(usize, usize), usize>,
}

impl ZLayout {
    pub fn new(net: &Network) -> ZLayout {
        let n = net.num_sensors();
        let mut entries = vec![(0, 0), (0, 1), (1, 1)];
        for j in 0..n {
            entries.push((0, 2 + j));
            entries.push((1, 2 + j));
        }
        let mut touched = vec![false; n];
        for &(i, j) in net.sensor_edges() {
            touched[i] = true;
            touched[j] = true;
        }
        for &(j, _) in net.anchor_edges() {
            touched[j] = true;
        }
        entries.extend((0..n).filter(|&j| touched[j]).map(|j| (2 + j, 2 + j)));
        entries.extend(net.sensor_edges().iter().map(|&(i, j)| (2 + i, 2 + j)));
        let index = entries.iter().enumerate().map(|(s, &e)| (e, s)).collect();
        ZLayout {
            num_sensors: n,
            entries,
            index,
        }
    }

    /// Order of `Z`.
    pub fn dimension(&self) -> usize {
        2 + self.num_sensors
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry `(row, col)` with `row ≤ col` stored in each slot.
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn fixed_entries(&self) -> &[(usize, usize)] {
        &self.entries[..FIXED_ENTRIES]
    }

    pub fn active_entries(&self) -> &[(usize, usize)] {
        &self.entries[FIXED_ENTRIES..]
    }

    /// Slot holding `Z[r, c]` (either triangle).
    pub fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let key = if r <= c { (r, c) } else { (c, r) };
        self.index.get(&key).copied()
    }

    pub fn position_slots(&self, sensor: usize) -> [usize; 2] {
        [FIXED_ENTRIES + 2 * sensor, FIXED_ENTRIES + 2 * sensor + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BlockOwner {
    Edge { i: usize, j: usize },
    Sensor(usize),
}

/// One PSD cone of the program.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub owner: BlockOwner,
    pub rows: Range<usize>,
    /// Indices into `Z` spanned by the block, ascending.
    pub z_indices: Vec<usize>,
    pub perturbation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormulationWarning {
    /// Without anchor edges the relaxation is invariant under translations.
    NoAnchorEdges,
}

/// Index bookkeeping produced alongside a [`ConicProgram`].
#[derive(Debug, Clone, PartialEq)]
pub struct FormulationMap {
    pub layout: ZLayout,
    pub num_vars: usize,
    /// `(α⁺, α⁻)` slots per edge, combined edge order.
    pub alpha_slots: Vec<(usize, usize)>,
    /// Rows pinning `Z₀₀ = 1`, `Z₀₁ = 0`, `Z₁₁ = 1`.
    pub base_rows: [usize; 3],
    /// Distance row per edge, combined edge order.
    pub edge_rows: Vec<usize>,
    pub num_sensor_edges: usize,
    pub nonnegative_rows: Range<usize>,
    /// One block per sensor edge, in sensor-edge order.
    pub psd_blocks: Vec<PsdBlock>,
    pub single_sensor_blocks: Vec<PsdBlock>,
    pub warnings: Vec<FormulationWarning>,
}

impl FormulationMap {
    pub fn sensor_edge_rows(&self) -> &[usize] {
        &self.edge_rows[..self.num_sensor_edges]
    }

    pub fn anchor_edge_rows(&self) -> &[usize] {
        &self.edge_rows[self.num_sensor_edges..]
    }

    pub fn all_blocks(&self) -> impl Iterator<Item = &PsdBlock> {
        self.psd_blocks.iter().chain(&self.single_sensor_blocks)
    }

    /// Perturbation `p_ij` per sensor edge.
    pub fn perturbation(&self) -> BTreeMap<(usize, usize), f64> {
        self.psd_blocks
            .iter()
            .filter_map(|b| match b.owner {
                BlockOwner::Edge { i, j } => Some(((i, j), b.perturbation)),
                BlockOwner::Sensor(_) => None,
            })
            .collect()
    }

    /// Dense `Z` assembled from a decision vector; entries without a slot
    /// are zero.
    pub fn dense_z(&self, y: &[f64]) -> DMatrix<f64> {
        let d = self.layout.dimension();
        let mut z = DMatrix::zeros(d, d);
        for (slot, &(r, c)) in self.layout.entries().iter().enumerate() {
            z[(r, c)] = y[slot];
            z[(c, r)] = y[slot];
        }
        z
    }

    /// Principal submatrix of `Z` on the block's indices (without `p·I`).
    pub fn z_block(&self, y: &[f64], block: &PsdBlock) -> DMatrix<f64> {
        let k = block.z_indices.len();
        DMatrix::from_fn(k, k, |r, c| {
            let slot = self
                .layout
                .slot(block.z_indices[r], block.z_indices[c])
                .expect("block entries are always laid out");
            y[slot]
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulationOptions {
    /// Add a 3×3 block on `{0, 1, 2+j}` for each sensor that has anchor
    /// edges but no sensor edges.
    #[serde(default)]
    pub single_sensor_blocks: bool,
}

/// Per-block shift `p` in `Z_block + p·I ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// Same value on every block, including single-sensor blocks.
    Uniform(f64),
    /// Value per sensor edge `(i, j)`, `i < j`. Single-sensor blocks get 0.
    PerEdge(BTreeMap<(usize, usize), f64>),
}

/// Plain edge-based relaxation: every block `Z_{0,1,2+i,2+j} ⪰ 0`.
pub fn build_esdp(
    mn: &MeasuredNetwork,
    options: &FormulationOptions,
) -> Result<(ConicProgram, FormulationMap), FormulationError> {
    build_pesdp(mn, &Perturbation::Uniform(0.0), options)
}

/// Perturbed relaxation: every block `Z_block + p_ij·I ⪰ 0`.
pub fn build_pesdp(
    mn: &MeasuredNetwork,
    perturbation: &Perturbation,
    options: &FormulationOptions,
) -> Result<(ConicProgram, FormulationMap), FormulationError> {
    let net = mn.base();
    let edge_p: Vec<f64> = match perturbation {
        Perturbation::Uniform(p) => vec![*p; net.sensor_edges().len()],
        Perturbation::PerEdge(map) => net
            .sensor_edges()
            .iter()
            .map(|&(i, j)| {
                map.get(&(i, j)).copied().ok_or_else(|| {
                    FormulationError::MissingPerturbation(Edge::Sensor { i, j }.key())
                })
            })
            .collect::<Result<_, _>>()?,
    };
    for (&(i, j), &p) in net.sensor_edges().iter().zip(&edge_p) {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(FormulationError::NegativePerturbation {
                edge: Edge::Sensor { i, j }.key(),
                value: p,
            });
        }
    }
    let single_p = match perturbation {
        Perturbation::Uniform(p) => {
            if !(*p >= 0.0 && p.is_finite()) {
                return Err(FormulationError::NegativePerturbation {
                    edge: "all".into(),
                    value: *p,
                });
            }
            *p
        }
        Perturbation::PerEdge(_) => 0.0,
    };

    if net.num_edges() == 0 {
        return Err(FormulationError::EmptyEdgeSet);
    }
    let layout = ZLayout::new(net);
    let slot = |r: usize, c: usize| layout.slot(r, c).expect("entry is laid out");
    let n_edges = net.num_edges();
    let n_sensor_edges = net.sensor_edges().len();
    let num_z = layout.len();
    let num_vars = num_z + 2 * n_edges;
    let alpha_slots: Vec<(usize, usize)> = (0..n_edges)
        .map(|e| (num_z + 2 * e, num_z + 2 * e + 1))
        .collect();

    let mut objective = vec![0.0; num_vars];
    for &(ap, am) in &alpha_slots {
        objective[ap] = 1.0;
        objective[am] = 1.0;
    }

    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = Vec::new();
    let mut row = 0usize;

    // Z₀₀ = 1, Z₀₁ = 0, Z₁₁ = 1
    let base_rows = [0, 1, 2];
    for (k, (&(r, c), rhs)) in layout
        .fixed_entries()
        .iter()
        .zip([1.0, 0.0, 1.0])
        .enumerate()
    {
        trip.push((base_rows[k], slot(r, c), 1.0));
        b.push(rhs);
    }
    row += 3;

    let mut edge_rows = Vec::with_capacity(n_edges);
    for (e, edge) in net.edges().enumerate() {
        let (ap, am) = alpha_slots[e];
        match edge {
            Edge::Sensor { i, j } => {
                // (0; e_i - e_j)ᵀ Z (0; e_i - e_j) = Y_ii - 2 Y_ij + Y_jj
                trip.push((row, slot(2 + i, 2 + i), 1.0));
                trip.push((row, slot(2 + j, 2 + j), 1.0));
                trip.push((row, slot(2 + i, 2 + j), -2.0));
            }
            Edge::Anchor {
                sensor: j,
                anchor: k,
            } => {
                // (-a_k; e_j)ᵀ Z (-a_k; e_j)
                let a = net.anchors()[k];
                trip.push((row, slot(0, 0), a[0] * a[0]));
                trip.push((row, slot(0, 1), 2.0 * a[0] * a[1]));
                trip.push((row, slot(1, 1), a[1] * a[1]));
                trip.push((row, slot(0, 2 + j), -2.0 * a[0]));
                trip.push((row, slot(1, 2 + j), -2.0 * a[1]));
                trip.push((row, slot(2 + j, 2 + j), 1.0));
            }
        }
        trip.push((row, ap, -1.0));
        trip.push((row, am, 1.0));
        b.push(mn.squared_measurement(e));
        edge_rows.push(row);
        row += 1;
    }
    let n_zero = row;

    let nonneg_start = row;
    for &(ap, am) in &alpha_slots {
        for s in [ap, am] {
            trip.push((row, s, -1.0));
            b.push(0.0);
            row += 1;
        }
    }
    let nonnegative_rows = nonneg_start..row;

    let push_block =
        |z_indices: Vec<usize>, p: f64, row: &mut usize, trip: &mut Vec<_>, b: &mut Vec<f64>| {
            let start = *row;
            let k = z_indices.len();
            for c in 0..k {
                for r in 0..=c {
                    let s = slot(z_indices[r], z_indices[c]);
                    if r == c {
                        trip.push((*row, s, -1.0));
                        b.push(p);
                    } else {
                        trip.push((*row, s, -SQRT_2));
                        b.push(0.0);
                    }
                    *row += 1;
                }
            }
            start..*row
        };

    let mut psd_blocks = Vec::with_capacity(n_sensor_edges);
    for (&(i, j), &p) in net.sensor_edges().iter().zip(&edge_p) {
        let z_indices = vec![0, 1, 2 + i, 2 + j];
        let rows = push_block(z_indices.clone(), p, &mut row, &mut trip, &mut b);
        psd_blocks.push(PsdBlock {
            owner: BlockOwner::Edge { i, j },
            rows,
            z_indices,
            perturbation: p,
        });
    }

    let mut single_sensor_blocks = Vec::new();
    if options.single_sensor_blocks {
        let degrees = net.sensor_degrees();
        let mut anchored = vec![false; net.num_sensors()];
        for &(j, _) in net.anchor_edges() {
            anchored[j] = true;
        }
        for j in (0..net.num_sensors()).filter(|&j| anchored[j] && degrees[j] == 0) {
            let z_indices = vec![0, 1, 2 + j];
            let rows = push_block(z_indices.clone(), single_p, &mut row, &mut trip, &mut b);
            single_sensor_blocks.push(PsdBlock {
                owner: BlockOwner::Sensor(j),
                rows,
                z_indices,
                perturbation: single_p,
            });
        }
    }

    let mut cones = vec![Cone::Zero(n_zero), Cone::Nonnegative(2 * n_edges)];
    cones.extend(psd_blocks.iter().map(|_| Cone::Psd(4)));
    cones.extend(single_sensor_blocks.iter().map(|_| Cone::Psd(3)));

    let a = CscMatrix::from_triplets(row, num_vars, &trip);
    let mut warnings = Vec::new();
    if net.anchor_edges().is_empty() {
        log::warn!("network has no anchor edges; the relaxation has a translational gauge freedom");
        warnings.push(FormulationWarning::NoAnchorEdges);
    }

    let program = ConicProgram {
        objective,
        a,
        b,
        cones,
    };
    debug_assert!(program.check_dimensions().is_ok());
    let map = FormulationMap {
        layout,
        num_vars,
        alpha_slots,
        base_rows,
        edge_rows,
        num_sensor_edges: n_sensor_edges,
        nonnegative_rows,
        psd_blocks,
        single_sensor_blocks,
        warnings,
    };
    Ok((program, map))
}

/// Dense `Z` built from true positions, `Y = XᵀX`.
pub fn true_z(net: &Network) -> DMatrix<f64> {
    let n = net.num_sensors();
    let mut z = DMatrix::zeros(n + 2, n + 2);
    z[(0, 0)] = 1.0;
    z[(1, 1)] = 1.0;
    let x = net.sensors();
    for j in 0..n {
        for a in 0..2 {
            z[(a, 2 + j)] = x[j][a];
            z[(2 + j, a)] = x[j][a];
        }
        for i in 0..n {
            z[(2 + i, 2 + j)] = x[i][0] * x[j][0] + x[i][1] * x[j][1];
        }
    }
    z
}

/// Decision vector holding the true `Z` entries and `α = 0`.
pub fn true_solution_vector(
    net: &Network,
    map: &FormulationMap,
) -> Result<Vec<f64>, FormulationError> {
    let expected = ZLayout::new(net);
    if expected != map.layout {
        return Err(FormulationError::LayoutMismatch(format!(
            "layout has {} slots over {} sensors, network implies {} slots over {}",
            map.layout.len(),
            map.layout.num_sensors(),
            expected.len(),
            expected.num_sensors()
        )));
    }
    if map.alpha_slots.len() != net.num_edges() {
        return Err(FormulationError::LayoutMismatch(format!(
            "map has {} edges, network has {}",
            map.alpha_slots.len(),
            net.num_edges()
        )));
    }
    let z = true_z(net);
    let mut y = vec![0.0; map.num_vars];
    for (slot, &(r, c)) in map.layout.entries().iter().enumerate() {
        y[slot] = z[(r, c)];
    }
    Ok(y)
}
