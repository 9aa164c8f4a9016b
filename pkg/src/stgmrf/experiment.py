"""End-to-end space-time conditioning experiment.

A field is drawn from the non-separable prior, observed with noise at the
first time point only, and both the separable and non-separable models are
conditioned on those data.  Posterior means and posterior draws are then
rasterized for every time slice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .factor import cholesky, logdet, solve_full
from .fem import Mesh1D, TriMesh2D, fem_1d, fem_2d, read_mesh, structured_mesh, temporal_boundary
from .gmrf import ObservationModel, SampleConfig, posterior_precision, sample, sample_from_factor
from .project import FieldGrid, projector
from .selinv import marginal_variances
from .spacetime import SpaceTimeHyper, build_models, interior_mask, time_slice

MODELS = ("separable", "nonseparable")
# noise draws use a stream far away from the column streams of the prior sample
NOISE_STREAM = 1 << 32


@dataclass(frozen=True)
class ExperimentSpec:
    out_dir: Path
    mesh_path: Path | None = None
    grid: tuple = ((-6.0, 16.0), (-6.0, 16.0), 34, 34)
    t_max: int = 8
    hyper: SpaceTimeHyper = field(default_factory=SpaceTimeHyper.from_ranges)
    sigma_eps: float = 0.01
    sample_seed: int = 2019
    noise_seed: int = 2019
    posterior_seed: int = 1
    posterior_reordering: str = "identity"
    models: tuple = MODELS
    dims: tuple = (200, 200)
    cores: int = 1

    def __post_init__(self):
        if self.t_max < 2:
            raise ValueError("t_max must be at least 2")
        if not self.sigma_eps > 0:
            raise ValueError("sigma_eps must be positive")
        bad = [m for m in self.models if m not in MODELS]
        if bad or not self.models:
            raise ValueError(f"models must be drawn from {MODELS}, got {self.models}")
        if self.mesh_path is not None and not Path(self.mesh_path).is_file():
            raise FileNotFoundError(f"mesh file {self.mesh_path} does not exist")

    def mesh(self) -> TriMesh2D:
        if self.mesh_path is None:
            xr, yr, nx, ny = self.grid
            return structured_mesh(xr, yr, int(nx), int(ny))
        m = read_mesh(self.mesh_path)
        if not isinstance(m, TriMesh2D):
            raise ValueError("experiment needs a 2-D spatial mesh")
        return m


def _summary(v: np.ndarray) -> dict:
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {"min": q[0], "q1": q[1], "median": q[2], "mean": float(np.mean(v)), "q3": q[3], "max": q[4]}


def _rms(a: np.ndarray) -> float:
    return float(np.sqrt(np.mean(a * a)))


def run_experiment(spec: ExperimentSpec, stage=None) -> dict:
    """Run the experiment and write its outputs; returns the summary dict.

    ``stage``, when given, is called with a stage name before each step so a
    caller can report where a failure happened.
    """
    mark = stage or (lambda name: None)
    mark("mesh")
    mesh = spec.mesh()
    ns, nt = mesh.n, spec.t_max
    mark("fem")
    sfem = fem_2d(mesh, order=4)
    tfem = fem_1d(Mesh1D(np.arange(1, nt + 1, dtype=np.float64)), order=2)
    mark("build-q")
    models = build_models(tfem, temporal_boundary(nt), sfem, spec.hyper)
    interior = interior_mask(mesh.boundary_distance(), spec.hyper.range_space)

    mark("sample")
    u = sample(models["nonseparable"], SampleConfig(seed=spec.sample_seed, n_samples=1, cores=spec.cores))[:, 0]
    eps = spec.sigma_eps * rng.standard_normal(spec.noise_seed, NOISE_STREAM, ns)
    y = np.full(ns * nt, np.nan)
    y[:ns] = u[:ns] + eps
    obs = ObservationModel.direct(y, spec.sigma_eps)

    mark("project")
    proj = projector(mesh, spec.dims)
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    means = {}
    for name in spec.models:
        q = models[name]
        mark(f"{name}/prior-selinv")
        fq = cholesky(q, "amd", spec.cores)
        var = marginal_variances(fq, spec.cores)
        mark(f"{name}/posterior")
        qp = posterior_precision(q, obs)
        fp = cholesky(qp, "amd", spec.cores)
        mu = solve_full(fp, obs.sigma_eps**-2 * (obs.A.to_scipy().T @ obs.y))
        cfg = SampleConfig(seed=spec.posterior_seed, n_samples=1, reordering=spec.posterior_reordering,
                           cores=spec.cores)
        fs = fp if spec.posterior_reordering == "amd" else cholesky(qp, spec.posterior_reordering, spec.cores)
        sim = sample_from_factor(fs, cfg)[:, 0] + mu
        means[name] = mu
        mark(f"{name}/write")
        d = out / name
        d.mkdir(exist_ok=True)
        for t in range(nt):
            FieldGrid(t + 1, proj.project(time_slice(mu, ns, t))).write_csv(d / f"mean_t{t + 1}.csv")
            FieldGrid(t + 1, proj.project(time_slice(sim, ns, t))).write_csv(d / f"sim_t{t + 1}.csv")
        mask = np.tile(interior, nt)
        results[name] = {
            "prior_variance": _summary(var),
            "prior_variance_interior": _summary(var[mask]) if mask.any() else None,
            "logdet_prior": logdet(fq),
            "logdet_posterior": logdet(fp),
            "max_abs_error_observed": float(np.max(np.abs(mu[:ns] - y[:ns]))),
        }

    summary = {
        "generator": rng.GENERATOR,
        "seeds": {"sample": spec.sample_seed, "noise": spec.noise_seed, "noise_stream": NOISE_STREAM,
                  "posterior": spec.posterior_seed},
        "posterior_reordering": spec.posterior_reordering,
        "hyper": spec.hyper.to_dict(),
        "sigma_eps": spec.sigma_eps,
        "t_max": nt,
        "mesh": {"vertices": ns, "triangles": int(mesh.triangles.shape[0]), "interior": int(interior.sum())},
        "raster": {"nx": int(proj.x.size), "ny": int(proj.y.size), "x": [proj.x[0], proj.x[-1]],
                   "y": [proj.y[0], proj.y[-1]]},
        "field_std_t1": float(np.std(u[:ns])),
        "models": results,
    }
    if len(means) == 2:
        diff = means["separable"] - means["nonseparable"]
        summary["rms_model_difference"] = [_rms(time_slice(diff, ns, t)) for t in range(nt)]
    mark("summary")
    (out / "summary.json").write_text(json.dumps(_plain(summary), indent=2, sort_keys=True) + "\n")
    return summary


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x
