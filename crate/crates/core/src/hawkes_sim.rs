//! Ground-truth simulator: a spatiotemporal self-exciting process with a
//! uniform background and exponential/Gaussian triggering, built by cluster
//! (branching) construction.
//!
//! Background events arrive as a homogeneous Poisson process on the disc;
//! each event independently spawns Poisson(n) offspring with Exp(omega) time
//! lags and isotropic Gaussian spatial offsets. Offspring falling outside
//! the disc or horizon are discarded. Everything is driven by one seeded
//! ChaCha12 stream, so a spec reproduces its catalog exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{unproject, Event, EventCatalog};

/// Identifier of the random stream, recorded in the truth sidecar.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Generations after which the cluster recursion is cut. Subcritical
/// cascades die out long before this; tests assert the cap is never hit for
/// n <= 0.9.
const GENERATION_CAP: usize = 100;

/// Ground-truth process parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    /// Background rate, events/(km^2 * day).
    pub mu: f64,
    /// Branching ratio (expected offspring per event), must be < 1.
    pub branching: f64,
    /// Temporal decay rate of the trigger kernel, 1/day.
    pub omega: f64,
    /// Spatial scale (Gaussian sigma) of the trigger kernel, km.
    pub sigma: f64,
    /// Disc radius, km.
    pub radius_km: f64,
    /// Horizon, days.
    pub horizon_days: f64,
    pub seed: u64,
    /// Kind label stamped on generated events.
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Geographic center used to back-fill lat/lon.
    #[serde(default = "default_center")]
    pub center: (f64, f64),
}

fn default_kind() -> String {
    "SYNTHETIC".to_string()
}

fn default_center() -> (f64, f64) {
    (41.765, -87.665)
}

impl SimSpec {
    fn validate(&self) -> Result<()> {
        if self.branching >= 1.0 {
            return Err(Error::Supercritical(self.branching));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::BadSimSpec(format!(
                "mu must be non-negative, got {}",
                self.mu
            )));
        }
        let positive = [
            ("omega", self.omega),
            ("sigma", self.sigma),
            ("radius_km", self.radius_km),
            ("horizon_days", self.horizon_days),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::BadSimSpec(format!("{name} must be positive, got {v}")));
            }
        }
        if self.branching < 0.0 {
            return Err(Error::BadSimSpec(format!(
                "branching must be in [0, 1), got {}",
                self.branching
            )));
        }
        Ok(())
    }

    /// True trigger kernel of the simulated process at lag `t` days and
    /// distance `r` km, events/(day * km^2).
    pub fn true_kernel(&self, t: f64, r: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let temporal = self.branching * self.omega * (-self.omega * t).exp();
        let s2 = self.sigma * self.sigma;
        let spatial = (-r * r / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2);
        temporal * spatial
    }
}

struct Seed {
    time: f64,
    x: f64,
    y: f64,
    generation: usize,
}

/// Runs the cluster construction for `spec` and returns the sorted catalog.
pub fn simulate(spec: &SimSpec) -> Result<EventCatalog> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let disc_area = std::f64::consts::PI * spec.radius_km * spec.radius_km;

    // Background generation.
    let expected = spec.mu * disc_area * spec.horizon_days;
    let n_background = if expected > 0.0 {
        Poisson::new(expected)
            .map_err(|e| Error::BadSimSpec(e.to_string()))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let mut queue: Vec<Seed> = Vec::with_capacity(n_background);
    for _ in 0..n_background {
        let t = rng.gen_range(0.0..spec.horizon_days);
        // Uniform on the disc via the inverse-CDF radius.
        let r = spec.radius_km * rng.gen::<f64>().sqrt();
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        queue.push(Seed {
            time: t,
            x: r * theta.cos(),
            y: r * theta.sin(),
            generation: 0,
        });
    }

    let lag_distr = Exp::new(spec.omega).map_err(|e| Error::BadSimSpec(e.to_string()))?;
    let offset_distr = Normal::new(0.0, spec.sigma).map_err(|e| Error::BadSimSpec(e.to_string()))?;

    // FIFO processing keeps the draw order a pure function of the seed.
    let mut all: Vec<Seed> = Vec::new();
    let mut head = 0usize;
    while head < queue.len() {
        let parent = std::mem::replace(
            &mut queue[head],
            Seed {
                time: 0.0,
                x: 0.0,
                y: 0.0,
                generation: 0,
            },
        );
        head += 1;
        if parent.generation >= GENERATION_CAP {
            return Err(Error::BadSimSpec(format!(
                "cluster recursion exceeded {GENERATION_CAP} generations; branching {} is too close to critical",
                spec.branching
            )));
        }
        let n_children = if spec.branching > 0.0 {
            Poisson::new(spec.branching)
                .map_err(|e| Error::BadSimSpec(e.to_string()))?
                .sample(&mut rng) as usize
        } else {
            0
        };
        for _ in 0..n_children {
            let t = parent.time + lag_distr.sample(&mut rng);
            let x = parent.x + offset_distr.sample(&mut rng);
            let y = parent.y + offset_distr.sample(&mut rng);
            if t < spec.horizon_days && x.hypot(y) <= spec.radius_km {
                queue.push(Seed {
                    time: t,
                    x,
                    y,
                    generation: parent.generation + 1,
                });
            }
        }
        all.push(parent);
    }

    let mut events: Vec<Event> = all
        .into_iter()
        .map(|s| {
            let (lat, lon) = unproject(s.x, s.y, spec.center);
            Event {
                time: s.time,
                lat,
                lon,
                x: s.x,
                y: s.y,
                kind: spec.kind.clone(),
            }
        })
        .collect();
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    Ok(EventCatalog {
        events,
        epoch: chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
        center: spec.center,
        radius_km: Some(spec.radius_km),
    })
}

/// Sidecar describing the ground truth of a simulated catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTruth {
    pub spec: SimSpec,
    pub rng_algorithm: String,
    pub n_events: usize,
}

/// Writes the `(spec, rng id, count)` JSON sidecar.
pub fn write_truth<W: std::io::Write>(spec: &SimSpec, catalog: &EventCatalog, writer: W) -> Result<()> {
    let truth = SimTruth {
        spec: spec.clone(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        n_events: catalog.len(),
    };
    serde_json::to_writer_pretty(writer, &truth).map_err(|e| Error::Metadata(e.to_string()))?;
    Ok(())
}
