use std::collections::BTreeMap;

use ndarray::Array2;

use super::terms::{
    curl_match_loss_field, dielectric_loss, dirichlet_loss, interface_loss, laplacian_loss, neumann_loss, Bound,
    BoundNetwork, FieldMode,
};
use super::{check_compatible, term_set, LossBundle, LossTerm, LossWeights, Method, ProblemSpec};
use crate::diffcore::{central_difference, Differentiable};
use crate::error::{Error, Result};
use crate::geometry::{BoundarySample, SamplePlan};
use crate::nets::{FieldEval, FieldModel, Need, Network};

/// Step for the finite-difference gradient of circuit angles.
pub const QUANTUM_FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Boundary,
    Interior,
    Interface,
    Wall,
}

#[derive(Debug, Clone)]
struct Batch {
    part: usize,
    points: Array2<f64>,
    need: Need,
}

/// One contribution of a subnet to a sample: batch, row and averaging weight.
#[derive(Debug, Clone, Copy)]
struct Slot {
    batch: usize,
    row: usize,
    weight: f64,
}

#[derive(Debug, Clone)]
struct Sample {
    slots: Vec<Slot>,
    target: f64,
}

#[derive(Debug, Clone)]
struct WallPoint {
    slots: Vec<Slot>,
    normal: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Pair {
    a: Slot,
    b: Slot,
    normal: Vec<f64>,
}

/// Accumulated combination of subnet outputs at one sample.
struct Combined {
    value: f64,
    grad: Vec<f64>,
    lap: f64,
    curl: Vec<f64>,
}

/// A method's full training objective on a fixed sample plan. Forward and
/// backward passes run batched per subnet and sample group.
#[derive(Debug, Clone)]
pub struct Objective {
    pub method: Method,
    pub network: Network,
    pub weights: LossWeights,
    pub terms: Vec<LossTerm>,
    pub problem: ProblemSpec,
    pub plan: SamplePlan,
    dirichlet_samples: Vec<BoundarySample>,
    batches: Vec<Batch>,
    dirichlet: Vec<Sample>,
    interior: Vec<Sample>,
    interface: Vec<Pair>,
    dielectric: Vec<Pair>,
    walls: Vec<WallPoint>,
    eps: (f64, f64),
    mode: FieldMode,
    offsets: Vec<usize>,
}

#[derive(Default)]
struct Builder {
    index: BTreeMap<(usize, Group), usize>,
    rows: Vec<(usize, Group, Vec<Vec<f64>>)>,
}

impl Builder {
    fn push(&mut self, part: usize, group: Group, x: &[f64], weight: f64) -> Slot {
        let batch = *self.index.entry((part, group)).or_insert_with(|| {
            self.rows.push((part, group, Vec::new()));
            self.rows.len() - 1
        });
        let rows = &mut self.rows[batch].2;
        rows.push(x.to_vec());
        Slot {
            batch,
            row: rows.len() - 1,
            weight,
        }
    }
}

/// Builds the objective of `method` on `problem` for an already constructed
/// network and sample plan.
pub fn assemble(
    method: Method,
    problem: &ProblemSpec,
    network: Network,
    plan: SamplePlan,
    weights: LossWeights,
) -> Result<Objective> {
    check_compatible(method, problem)?;
    weights.validate()?;
    let dim = problem.dim();
    if network.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: network.dim(),
        });
    }
    let mut terms = term_set(method, problem);
    let mode = if method == Method::CurlNet {
        FieldMode::Curl
    } else {
        FieldMode::Gradient
    };
    let mut b = Builder::default();

    let wrapped = match &network.parts[0] {
        FieldModel::Hpinn { wrap, .. } => Some(wrap.value),
        _ => None,
    };
    let dirichlet_samples: Vec<BoundarySample> = plan
        .boundary
        .iter()
        .filter(|s| Some(s.value) != wrapped)
        .cloned()
        .collect();
    if dirichlet_samples.is_empty() {
        if wrapped.is_some() {
            terms.retain(|t| *t != LossTerm::Dirichlet);
        } else {
            return Err(Error::EmptySamples("Dirichlet samples"));
        }
    }
    let mut dirichlet = Vec::with_capacity(dirichlet_samples.len());
    for s in &dirichlet_samples {
        let slots = network
            .owners(&s.x)?
            .into_iter()
            .map(|(p, w)| b.push(p, Group::Boundary, &s.x, w))
            .collect();
        dirichlet.push(Sample { slots, target: s.value });
    }

    let mut interior = Vec::new();
    if terms.contains(&LossTerm::Laplacian) || terms.contains(&LossTerm::CurlMatch) {
        if plan.interior.is_empty() {
            return Err(Error::EmptySamples("collocation points"));
        }
        for x in &plan.interior {
            let slots = network
                .owners(x)?
                .into_iter()
                .map(|(p, w)| b.push(p, Group::Interior, x, w))
                .collect();
            interior.push(Sample { slots, target: 0.0 });
        }
    }

    let mut pairs = |which: Option<usize>| -> Result<Vec<Pair>> {
        let dec = network
            .partition
            .as_ref()
            .ok_or_else(|| Error::Incompatible("interface terms need a partitioned network".into()))?;
        let mut out = Vec::new();
        for (k, iface) in dec.interfaces.iter().enumerate() {
            if which.is_some_and(|w| w != k) {
                continue;
            }
            let pts = plan
                .interfaces
                .get(k)
                .filter(|p| !p.is_empty())
                .ok_or(Error::EmptySamples("interface samples"))?;
            for x in pts {
                out.push(Pair {
                    a: b.push(iface.pair.0, Group::Interface, x, 1.0),
                    b: b.push(iface.pair.1, Group::Interface, x, 1.0),
                    normal: iface.normal.to_vec(),
                });
            }
        }
        Ok(out)
    };
    let interface = if terms.contains(&LossTerm::Interface) {
        pairs(None)?
    } else {
        Vec::new()
    };
    let dielectric = if terms.contains(&LossTerm::Dielectric) {
        pairs(Some(0))?
    } else {
        Vec::new()
    };
    let eps = problem.dielectric.map(|d| (d.eps1, d.eps2)).unwrap_or((1.0, 1.0));

    let mut walls = Vec::new();
    if terms.contains(&LossTerm::Neumann) {
        if plan.walls.is_empty() {
            return Err(Error::EmptySamples("wall samples"));
        }
        for s in &plan.walls {
            let slots = network
                .owners(&s.x)?
                .into_iter()
                .map(|(p, w)| b.push(p, Group::Wall, &s.x, w))
                .collect();
            walls.push(WallPoint {
                slots,
                normal: s.normal.clone(),
            });
        }
    }

    let batches = b
        .rows
        .into_iter()
        .map(|(part, group, rows)| {
            let need = match group {
                Group::Boundary => Need::VALUE,
                Group::Interior if terms.contains(&LossTerm::Laplacian) => Need::LAP,
                Group::Interior => Need::GRAD.with_curl(),
                Group::Interface if mode == FieldMode::Curl && !terms.contains(&LossTerm::Interface) => Need::CURL,
                Group::Interface | Group::Wall => Need::GRAD,
            };
            let mut points = Array2::zeros((rows.len(), dim));
            for (i, r) in rows.iter().enumerate() {
                for k in 0..dim {
                    points[[i, k]] = r[k];
                }
            }
            Batch { part, points, need }
        })
        .collect();

    let offsets = network.offsets();
    Ok(Objective {
        method,
        network,
        weights,
        terms,
        problem: problem.clone(),
        plan,
        dirichlet_samples,
        batches,
        dirichlet,
        interior,
        interface,
        dielectric,
        walls,
        eps,
        mode,
        offsets,
    })
}

fn combine(evals: &[FieldEval], slots: &[Slot], dim: usize) -> Combined {
    let mut c = Combined {
        value: 0.0,
        grad: vec![0.0; dim],
        lap: 0.0,
        curl: vec![0.0; dim],
    };
    for s in slots {
        let e = &evals[s.batch];
        c.value += s.weight * e.value[s.row];
        if e.grad.ncols() == dim {
            for k in 0..dim {
                c.grad[k] += s.weight * e.grad[[s.row, k]];
            }
        }
        if !e.lap.is_empty() {
            c.lap += s.weight * e.lap[s.row];
        }
        if e.curl.ncols() == dim {
            for k in 0..dim {
                c.curl[k] += s.weight * e.curl[[s.row, k]];
            }
        }
    }
    c
}

/// Spreads adjoints of a combined quantity back onto its slots.
fn scatter(adj: &mut [FieldEval], slots: &[Slot], d: &Combined) {
    for s in slots {
        let a = &mut adj[s.batch];
        a.value[s.row] += s.weight * d.value;
        if a.grad.ncols() > 0 {
            for (k, g) in d.grad.iter().enumerate() {
                a.grad[[s.row, k]] += s.weight * g;
            }
        }
        if !a.lap.is_empty() {
            a.lap[s.row] += s.weight * d.lap;
        }
        if a.curl.ncols() > 0 {
            for (k, g) in d.curl.iter().enumerate() {
                a.curl[[s.row, k]] += s.weight * g;
            }
        }
    }
}

impl Objective {
    pub fn dim(&self) -> usize {
        self.network.dim()
    }

    /// The Dirichlet samples actually penalised (hPINN drops wrapped ones).
    pub fn dirichlet_samples(&self) -> &[BoundarySample] {
        &self.dirichlet_samples
    }

    fn part_params<'a>(&self, params: &'a [f64], part: usize) -> &'a [f64] {
        let start = self.offsets[part];
        &params[start..start + self.network.parts[part].param_count()]
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.network.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.network.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Loss bundle and, when `grad` is given, the exact parameter gradient of
    /// every differentiable subnet accumulated into it.
    fn run(&self, params: &[f64], grad: Option<&mut [f64]>) -> Result<LossBundle> {
        self.check(params)?;
        let dim = self.dim();
        let mut evals = Vec::with_capacity(self.batches.len());
        let mut tapes = Vec::with_capacity(self.batches.len());
        for bt in &self.batches {
            let model = &self.network.parts[bt.part];
            let (e, t) = model.forward_batch(self.part_params(params, bt.part), bt.points.view(), bt.need)?;
            evals.push(e);
            tapes.push(t);
        }
        let mut adj: Vec<FieldEval> = evals.iter().map(|e| e.zero_adjoint()).collect();
        let want_grad = grad.is_some();
        let zero = || Combined {
            value: 0.0,
            grad: vec![0.0; dim],
            lap: 0.0,
            curl: vec![0.0; dim],
        };
        let mut out = Vec::new();
        for &term in &self.terms {
            let w = self.weights.get(term);
            let value = match term {
                LossTerm::Dirichlet => {
                    let n = self.dirichlet.len() as f64;
                    let mut acc = 0.0;
                    for s in &self.dirichlet {
                        let r = combine(&evals, &s.slots, dim).value - s.target;
                        acc += r * r;
                        if want_grad {
                            let mut d = zero();
                            d.value = w * 2.0 * r / n;
                            scatter(&mut adj, &s.slots, &d);
                        }
                    }
                    acc / n
                }
                LossTerm::Laplacian => {
                    let n = self.interior.len() as f64;
                    let mut acc = 0.0;
                    for s in &self.interior {
                        let l = combine(&evals, &s.slots, dim).lap;
                        acc += l * l;
                        if want_grad {
                            let mut d = zero();
                            d.lap = w * 2.0 * l / n;
                            scatter(&mut adj, &s.slots, &d);
                        }
                    }
                    acc / n
                }
                LossTerm::CurlMatch => {
                    let n = self.interior.len() as f64;
                    let mut acc = 0.0;
                    for s in &self.interior {
                        let c = combine(&evals, &s.slots, dim);
                        let mut d = zero();
                        for k in 0..dim {
                            let r = c.grad[k] - c.curl[k];
                            acc += r * r;
                            d.grad[k] = w * 2.0 * r / n;
                            d.curl[k] = -d.grad[k];
                        }
                        if want_grad {
                            scatter(&mut adj, &s.slots, &d);
                        }
                    }
                    acc / n
                }
                LossTerm::Interface => {
                    let n = self.interface.len() as f64;
                    let mut acc = 0.0;
                    for p in &self.interface {
                        let (ca, cb) = (combine(&evals, &[p.a], dim), combine(&evals, &[p.b], dim));
                        let mut d = zero();
                        let r = ca.value - cb.value;
                        acc += r * r;
                        d.value = w * 2.0 * r / n;
                        for k in 0..dim {
                            let g = ca.grad[k] - cb.grad[k];
                            acc += g * g;
                            d.grad[k] = w * 2.0 * g / n;
                        }
                        if want_grad {
                            scatter(&mut adj, &[p.a], &d);
                            scatter(
                                &mut adj,
                                &[Slot {
                                    weight: -p.b.weight,
                                    ..p.b
                                }],
                                &d,
                            );
                        }
                    }
                    acc / n
                }
                LossTerm::Dielectric => {
                    let n = self.dielectric.len() as f64;
                    let (e1, e2) = self.eps;
                    let mut acc = 0.0;
                    for p in &self.dielectric {
                        let (ca, cb) = (combine(&evals, &[p.a], dim), combine(&evals, &[p.b], dim));
                        let (fa, fb) = match self.mode {
                            FieldMode::Gradient => (&ca.grad, &cb.grad),
                            FieldMode::Curl => (&ca.curl, &cb.curl),
                        };
                        let jump = ca.value - cb.value;
                        let flux: f64 = (0..dim).map(|k| (e1 * fa[k] - e2 * fb[k]) * p.normal[k]).sum();
                        acc += jump * jump + flux * flux;
                        if want_grad {
                            let (mut da, mut db) = (zero(), zero());
                            da.value = w * 2.0 * jump / n;
                            db.value = -da.value;
                            for k in 0..dim {
                                let g = w * 2.0 * flux * p.normal[k] / n;
                                let (ga, gb) = match self.mode {
                                    FieldMode::Gradient => (&mut da.grad, &mut db.grad),
                                    FieldMode::Curl => (&mut da.curl, &mut db.curl),
                                };
                                ga[k] = e1 * g;
                                gb[k] = -e2 * g;
                            }
                            scatter(&mut adj, &[p.a], &da);
                            scatter(&mut adj, &[p.b], &db);
                        }
                    }
                    acc / n
                }
                LossTerm::Neumann => {
                    let n = self.walls.len() as f64;
                    let mut acc = 0.0;
                    for s in &self.walls {
                        let c = combine(&evals, &s.slots, dim);
                        let flux: f64 = (0..dim).map(|k| c.grad[k] * s.normal[k]).sum();
                        acc += flux * flux;
                        if want_grad {
                            let mut d = zero();
                            for k in 0..dim {
                                d.grad[k] = w * 2.0 * flux * s.normal[k] / n;
                            }
                            scatter(&mut adj, &s.slots, &d);
                        }
                    }
                    acc / n
                }
            };
            out.push((term, w, value));
        }
        let bundle = LossBundle::from_terms(out);
        if !bundle.total.is_finite() {
            return Err(Error::NonFiniteLoss { index: None });
        }
        if let Some(grad) = grad {
            for (i, bt) in self.batches.iter().enumerate() {
                let model = &self.network.parts[bt.part];
                let start = self.offsets[bt.part];
                let end = start + model.param_count();
                model.backward_batch(&params[start..end], &tapes[i], &adj[i], &mut grad[start..end])?;
            }
        }
        Ok(bundle)
    }

    /// All loss terms at `params`.
    pub fn bundle(&self, params: &[f64]) -> Result<LossBundle> {
        self.run(params, None)
    }
}

impl Differentiable for Objective {
    fn param_count(&self) -> usize {
        self.network.param_count()
    }

    fn loss(&self, params: &[f64]) -> Result<f64> {
        Ok(self.run(params, None)?.total)
    }

    fn loss_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; params.len()];
        let total = self.run(params, Some(&mut grad))?.total;
        for (i, part) in self.network.parts.iter().enumerate() {
            if part.has_exact_gradient() {
                continue;
            }
            let range = self.network.part_range(i);
            let fd = central_difference(|p| self.loss(p), params, QUANTUM_FD_STEP, range.clone())?;
            grad[range.clone()].copy_from_slice(&fd[range]);
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { index: Some(i) });
        }
        Ok((total, grad))
    }
}

/// The objective's loss bundle recomputed sample by sample from the
/// per-point loss functions.
pub fn pointwise_bundle(obj: &Objective, params: &[f64]) -> Result<LossBundle> {
    obj.check(params)?;
    let net = BoundNetwork {
        net: &obj.network,
        params,
    };
    let part = |i: usize| Bound {
        model: &obj.network.parts[i],
        params: obj.part_params(params, i),
    };
    let mut out = Vec::new();
    for &term in &obj.terms {
        let value = match term {
            LossTerm::Dirichlet => dirichlet_loss(&net, &obj.dirichlet_samples)?,
            LossTerm::Laplacian => laplacian_loss(&net, &obj.plan.interior)?,
            LossTerm::CurlMatch => curl_match_loss_field(&net, &obj.plan.interior)?,
            LossTerm::Interface => {
                let dec = obj
                    .network
                    .partition
                    .as_ref()
                    .expect("interface term implies a partition");
                let mut acc = 0.0;
                let mut n = 0;
                for (k, iface) in dec.interfaces.iter().enumerate() {
                    let pts = &obj.plan.interfaces[k];
                    let (a, b) = (part(iface.pair.0), part(iface.pair.1));
                    acc += interface_loss(&a, &b, pts)? * pts.len() as f64;
                    n += pts.len();
                }
                acc / n as f64
            }
            LossTerm::Dielectric => {
                let dec = obj
                    .network
                    .partition
                    .as_ref()
                    .expect("dielectric term implies a partition");
                let iface = &dec.interfaces[0];
                let pts = &obj.plan.interfaces[0];
                let normals = vec![iface.normal.to_vec(); pts.len()];
                let (a, b) = (part(iface.pair.0), part(iface.pair.1));
                dielectric_loss(&a, &b, pts, &normals, obj.eps, obj.mode)?
            }
            LossTerm::Neumann => neumann_loss(&net, &obj.plan.walls)?,
        };
        out.push((term, obj.weights.get(term), value));
    }
    Ok(LossBundle::from_terms(out))
}
