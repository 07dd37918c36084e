//! Phase portrait bundles: everything needed to draw one parameter point,
//! as a single JSON document.

use anyhow::{Context, Result};
use bcnf::bifurcation::{find_cycle, Multipliers};
use bcnf::geometry::Polygon;
use bcnf::manifolds::{
    attractor_cloud, grow_manifold, special_points, trapping_polygons, AttractorOptions,
    ManifoldApprox, ManifoldKind, ManifoldSpec, SamplingInfo,
};
use bcnf::map::fixed_points;
use bcnf::{Error, Params, Point};
use serde::{Deserialize, Serialize};

pub type Xy = [f64; 2];

fn xy(p: Point) -> Xy {
    [p.x, p.y]
}

fn ring(p: &Polygon) -> Vec<Xy> {
    p.vertices.iter().copied().map(xy).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitOptions {
    pub unstable_depth: usize,
    pub stable_depth: usize,
    /// Itinerary of a periodic cycle to include, with its stable manifold.
    pub word: Option<String>,
    pub cycle_depth: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for PortraitOptions {
    fn default() -> Self {
        Self {
            unstable_depth: 12,
            stable_depth: 8,
            word: None,
            cycle_depth: 8,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsOut {
    #[serde(rename = "tau_L")]
    pub tau_l: f64,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "tau_R")]
    pub tau_r: f64,
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
}

impl From<Params> for ParamsOut {
    fn from(p: Params) -> Self {
        Self {
            tau_l: p.tau_l,
            delta_l: p.delta_l,
            tau_r: p.tau_r,
            delta_r: p.delta_r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct FixedPointsOut {
    pub X: Xy,
    pub Y: Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SpecialPointsOut {
    pub D: Xy,
    pub U: Xy,
    pub V: Xy,
    pub B: Xy,
    pub T: Xy,
    /// Absent when `phi(g(xi)) > 0`.
    pub Z: Option<Xy>,
    pub f_V: Xy,
    pub f_inv_V: Xy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldOut {
    pub label: String,
    pub kind: ManifoldKind,
    pub depth: usize,
    /// `levels[k]` holds the polylines after `k` applications of the map (or
    /// its inverse, for stable manifolds), each as a vertex array.
    pub levels: Vec<Vec<Vec<Xy>>>,
}

impl From<&ManifoldApprox> for ManifoldOut {
    fn from(m: &ManifoldApprox) -> Self {
        let levels = (0..m.levels.len())
            .map(|k| {
                m.level(k)
                    .iter()
                    .map(|p| p.vertices.iter().copied().map(xy).collect())
                    .collect()
            })
            .collect();
        Self {
            label: ManifoldSpec {
                kind: m.kind,
                base: m.base.clone(),
                branch: m.branch,
            }
            .label(),
            kind: m.kind,
            depth: m.depth,
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum AttractorOut {
    Sampled {
        n_components: usize,
        cloud: Vec<Xy>,
        component_labels: Vec<usize>,
        sampling: SamplingInfo,
    },
    /// The orbit left every bounded region: no attractor at these parameters.
    Escaped { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleOut {
    pub word: String,
    pub points: Vec<Xy>,
    pub multipliers: Multipliers,
    pub saddle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortraitBundle {
    pub params: ParamsOut,
    pub fixed_points: FixedPointsOut,
    pub special_points: SpecialPointsOut,
    pub omega: Vec<Xy>,
    pub f_omega: Vec<Xy>,
    pub manifolds: Vec<ManifoldOut>,
    pub attractor: AttractorOut,
    pub cycles: Vec<CycleOut>,
}

pub fn run_portrait(xi: &Params, opts: &PortraitOptions) -> Result<PortraitBundle> {
    let sp = special_points(xi).context("special points")?;
    let fp = fixed_points(xi).context("fixed points")?;
    let trap = trapping_polygons(xi).context("trapping region")?;

    let mut manifolds = Vec::new();
    let wu = grow_manifold(xi, &ManifoldSpec::unstable_x(), opts.unstable_depth)
        .context("unstable manifold of X")?;
    manifolds.push(ManifoldOut::from(&wu));
    let ws = grow_manifold(xi, &ManifoldSpec::stable_x(), opts.stable_depth)
        .context("stable manifold of X")?;
    manifolds.push(ManifoldOut::from(&ws));

    let mut cycles = Vec::new();
    if let Some(word) = &opts.word {
        let c = find_cycle(xi, word).with_context(|| format!("cycle {word}"))?;
        let wc = grow_manifold(xi, &ManifoldSpec::cycle(ManifoldKind::Stable, word), opts.cycle_depth)
            .with_context(|| format!("stable manifold of cycle {word}"))?;
        manifolds.push(ManifoldOut::from(&wc));
        cycles.push(CycleOut {
            word: c.word,
            points: c.points.into_iter().map(xy).collect(),
            multipliers: c.multipliers,
            saddle: c.saddle,
        });
    }

    let aopts = AttractorOptions {
        samples: opts.samples,
        seed: opts.seed,
        ..Default::default()
    };
    let attractor = match attractor_cloud(xi, &aopts) {
        Ok(a) => AttractorOut::Sampled {
            n_components: a.n_components,
            cloud: a.cloud.into_iter().map(xy).collect(),
            component_labels: a.component_labels,
            sampling: a.params_used,
        },
        Err(e @ Error::Escaped { .. }) => AttractorOut::Escaped {
            message: e.to_string(),
        },
        Err(e) => return Err(e).context("attractor"),
    };

    Ok(PortraitBundle {
        params: (*xi).into(),
        fixed_points: FixedPointsOut {
            X: xy(fp.x),
            Y: xy(fp.y),
        },
        special_points: SpecialPointsOut {
            D: xy(sp.d),
            U: xy(sp.u),
            V: xy(sp.v),
            B: xy(sp.b),
            T: xy(sp.t),
            Z: sp.z.map(xy),
            f_V: xy(sp.f_v),
            f_inv_V: xy(sp.finv_v),
        },
        omega: ring(&trap.omega),
        f_omega: ring(&trap.f_omega),
        manifolds,
        attractor,
        cycles,
    })
}
