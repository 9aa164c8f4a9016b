"""Batch command-line interface.

Exit codes: 0 success, 1 unexpected failure, 2 usage or input parse error,
3 matrix not positive definite, 4 dimension mismatch, 5 benchmark memory cap.
Errors go to stderr prefixed with the stage that failed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import mmio
from .bench import BenchConfig, run_bench, write_csv
from .errors import DimensionMismatch, MatrixMarketError, MemoryCapExceeded, MeshError, NotPositiveDefinite
from .experiment import MODELS, ExperimentSpec, run_experiment
from .factor import cholesky, logdet, solve_full
from .fem import Mesh1D, fem_1d, fem_2d, read_mesh, structured_mesh, temporal_boundary
from .gmrf import ObservationModel, SampleConfig, posterior_precision, sample, sample_from_factor
from .selinv import selected_inverse
from .spacetime import SpaceTimeHyper, build_models, temporal_precision

EXIT_USAGE = 2
EXIT_NOT_PD = 3
EXIT_DIMENSION = 4
EXIT_MEMORY = 5

_stage = ["startup"]


def stage(name: str) -> None:
    _stage[0] = name


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        out = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not out:
        raise click.BadParameter("empty list")
    return out


def _read_q(path):
    stage("read")
    return mmio.read_symmetric(path)


def _factor(q, reordering, cores):
    stage("factorize")
    return cholesky(q, reordering, cores)


cores_opt = click.option("--cores", default=1, show_default=True, type=click.IntRange(min=1))
reorder_opt = click.option(
    "--reordering", default="amd", show_default=True, type=click.Choice(["amd", "identity", "rcm"])
)
out_opt = click.option("-o", "--out", "out", required=True, type=click.Path(dir_okay=False))
matrix_arg = click.argument("matrix", type=click.Path(exists=True, dir_okay=False))


@click.group()
@click.version_option(package_name="artifact")
def cli():
    """Sparse GMRF kernels, space-time precisions and benchmarks."""


@cli.command()
@click.argument("mesh", type=click.Path(exists=True, dir_okay=False))
@click.option("--order", default=2, show_default=True, type=click.IntRange(min=1))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def fem(mesh, order, out_dir):
    """Assemble c0, g1..g<order> for a mesh file; writes c0.mtx, g1.mtx, ..."""
    stage("read-mesh")
    m = read_mesh(mesh)
    stage("assemble")
    mats = fem_1d(m, order) if isinstance(m, Mesh1D) else fem_2d(m, order)
    stage("write")
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    mmio.write_symmetric(d / "c0.mtx", mats.c0)
    for k in range(1, mats.order + 1):
        mmio.write_symmetric(d / f"g{k}.mtx", mats.gm(k))


def _space_mesh(mesh, grid):
    if (mesh is None) == (grid is None):
        raise click.UsageError("give exactly one of --mesh or --grid")
    if mesh is not None:
        m = read_mesh(mesh)
        if isinstance(m, Mesh1D):
            raise MeshError(f"{mesh}: spatial mesh must be 2-D")
        return m
    x0, x1, y0, y1, nx, ny = grid
    return structured_mesh((x0, x1), (y0, y1), int(nx), int(ny))


def _grid_option(f):
    return click.option(
        "--grid",
        nargs=6,
        type=float,
        default=None,
        help="structured mesh: X0 X1 Y0 Y1 NX NY",
    )(f)


def _hyper_options(f):
    f = click.option("--range-time", default=20.0, show_default=True, type=float)(f)
    f = click.option("--range-space", default=6.0, show_default=True, type=float)(f)
    f = click.option("--sigma-u", default=1.0, show_default=True, type=float)(f)
    f = click.option("--gt", default=2.23, show_default=True, type=float)(f)
    f = click.option("--ge2", default=0.0805, show_default=True, type=float)(f)
    return f


@cli.command("build-q")
@click.option(
    "--model", required=True, type=click.Choice(["temporal", "spatial", "separable", "nonseparable"])
)
@click.option("--mesh", type=click.Path(exists=True, dir_okay=False), help="2-D spatial mesh file")
@_grid_option
@click.option("--t-max", default=8, show_default=True, type=click.IntRange(min=2))
@_hyper_options
@out_opt
def build_q(model, mesh, grid, t_max, range_time, range_space, sigma_u, gt, ge2, out):
    """Write a model precision matrix (space index varies fastest)."""
    stage("hyper")
    h = SpaceTimeHyper.from_ranges(range_time, range_space, sigma_u, gt, ge2)
    stage("read-mesh")
    smesh = _space_mesh(mesh, grid) if model != "temporal" else None
    stage("assemble")
    tfem = fem_1d(Mesh1D(np.arange(1, t_max + 1, dtype=np.float64)), order=2)
    sfem = fem_2d(smesh, order=4) if smesh is not None else None
    if sfem is None:
        q = temporal_precision(tfem, temporal_boundary(t_max), h.kappa_t)
    else:
        q = build_models(tfem, temporal_boundary(t_max), sfem, h)[model]
    stage("write")
    mmio.write_symmetric(out, q)


@cli.command()
@matrix_arg
@reorder_opt
@cores_opt
@out_opt
@click.option("--perm-out", type=click.Path(dir_okay=False), help="write perm[new] = old (0-based)")
def factorize(matrix, reordering, cores, out, perm_out):
    """Cholesky factor L of P Q P^T as a general Matrix Market file."""
    f = _factor(_read_q(matrix), reordering, cores)
    stage("write")
    lo = f.to_scipy().tocoo()
    order_ = np.lexsort((lo.row, lo.col))
    mmio.write_general(out, lo.shape, lo.row[order_], lo.col[order_], lo.data[order_])
    if perm_out:
        Path(perm_out).write_text("".join(f"{int(p)}\n" for p in f.permutation.perm))
    click.echo(f"n={f.n} nnz_l={f.symbolic.nnz_l}")


@cli.command()
@matrix_arg
@click.option("--rhs", required=True, type=click.Path(exists=True, dir_okay=False))
@reorder_opt
@cores_opt
@out_opt
def solve(matrix, rhs, reordering, cores, out):
    """Solve Q x = b; one output column per right-hand-side column."""
    q = _read_q(matrix)
    stage("read-rhs")
    b = mmio.read_vector(rhs)
    if b.shape[0] != q.n:
        raise DimensionMismatch(f"right-hand side has {b.shape[0]} rows, matrix is {q.n} x {q.n}")
    f = _factor(q, reordering, cores)
    stage("solve")
    x = solve_full(f, b)
    stage("write")
    mmio.write_vector(out, x)


@cli.command()
@matrix_arg
@reorder_opt
@cores_opt
@out_opt
def selinv(matrix, reordering, cores, out):
    """Entries of Q^-1 on the factor's pattern, in the original ordering."""
    f = _factor(_read_q(matrix), reordering, cores)
    stage("selinv")
    z = selected_inverse(f, cores)
    stage("write")
    mmio.write_symmetric(out, z.to_matrix())


@cli.command("sample")
@matrix_arg
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n-samples", default=1, show_default=True, type=click.IntRange(min=1))
@reorder_opt
@cores_opt
@out_opt
def sample_cmd(matrix, seed, n_samples, reordering, cores, out):
    """Draws from N(0, Q^-1), one column per sample."""
    q = _read_q(matrix)
    stage("sample")
    x = sample(q, SampleConfig(seed=seed, n_samples=n_samples, reordering=reordering, cores=cores))
    stage("write")
    mmio.write_vector(out, x)


@cli.command()
@matrix_arg
@click.option("--obs", required=True, type=click.Path(exists=True, dir_okay=False),
              help="observations; 'nan' marks a missing value")
@click.option("--projection", type=click.Path(exists=True, dir_okay=False),
              help="observation matrix A (default: direct observation of each site)")
@click.option("--sigma-eps", required=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n-samples", default=0, show_default=True, type=click.IntRange(min=0))
@click.option("--sample-out", type=click.Path(dir_okay=False))
@reorder_opt
@cores_opt
@out_opt
def posterior(matrix, obs, projection, sigma_eps, seed, n_samples, sample_out, reordering, cores, out):
    """Posterior mean (and optionally posterior draws) given Gaussian observations."""
    q = _read_q(matrix)
    stage("read-obs")
    y = mmio.read_vector(obs)
    if y.ndim != 1:
        raise MatrixMarketError(f"{obs}: observations must be a single column")
    stage("observation-model")
    if projection:
        model = ObservationModel.from_masked(mmio.read_general(projection), sigma_eps, y)
    else:
        if y.size != q.n:
            raise DimensionMismatch(f"{y.size} observations for {q.n} latent sites")
        model = ObservationModel.direct(y, sigma_eps)
    if n_samples and not sample_out:
        raise click.UsageError("--n-samples needs --sample-out")
    stage("posterior-precision")
    qp = posterior_precision(q, model)
    f = _factor(qp, reordering, cores)
    stage("solve")
    mu = solve_full(f, model.sigma_eps**-2 * (model.A.to_scipy().T @ model.y))
    stage("write")
    mmio.write_vector(out, mu)
    if n_samples:
        stage("sample")
        draws = sample_from_factor(f, SampleConfig(seed, n_samples, reordering, cores)) + mu[:, None]
        stage("write")
        mmio.write_vector(sample_out, draws)


@cli.command("logdet")
@matrix_arg
@reorder_opt
@cores_opt
def logdet_cmd(matrix, reordering, cores):
    """Print log det Q."""
    f = _factor(_read_q(matrix), reordering, cores)
    click.echo(repr(logdet(f)))


@cli.command()
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--mesh", type=click.Path(exists=True, dir_okay=False), help="2-D spatial mesh file")
@_grid_option
@click.option("--t-max", default=8, show_default=True, type=click.IntRange(min=2))
@_hyper_options
@click.option("--sigma-eps", default=0.01, show_default=True, type=float)
@click.option("--seed", default=2019, show_default=True, type=int, help="prior sample seed")
@click.option("--noise-seed", default=2019, show_default=True, type=int)
@click.option("--posterior-seed", default=1, show_default=True, type=int)
@click.option("--model", default="both", show_default=True, type=click.Choice(list(MODELS) + ["both"]))
@click.option("--dims", nargs=2, default=(200, 200), show_default=True, type=int)
@cores_opt
def experiment(out_dir, mesh, grid, t_max, range_time, range_space, sigma_u, gt, ge2, sigma_eps, seed,
               noise_seed, posterior_seed, model, dims, cores):
    """Simulate, observe at t=1, condition both models and export raster CSVs."""
    stage("spec")
    kwargs = {}
    if mesh is not None and grid is not None:
        raise click.UsageError("give at most one of --mesh or --grid")
    if mesh is not None:
        kwargs["mesh_path"] = Path(mesh)
    if grid is not None:
        x0, x1, y0, y1, nx, ny = grid
        kwargs["grid"] = ((x0, x1), (y0, y1), int(nx), int(ny))
    spec = ExperimentSpec(
        out_dir=Path(out_dir),
        t_max=t_max,
        hyper=SpaceTimeHyper.from_ranges(range_time, range_space, sigma_u, gt, ge2),
        sigma_eps=sigma_eps,
        sample_seed=seed,
        noise_seed=noise_seed,
        posterior_seed=posterior_seed,
        models=MODELS if model == "both" else (model,),
        dims=tuple(dims),
        cores=cores,
        **kwargs,
    )
    run_experiment(spec, stage=lambda name: stage(f"experiment/{name}"))


@cli.command()
@click.option("--n-list", required=True, callback=_int_list, help="cube sides, e.g. 8,16,24")
@click.option("--cores-list", default="1", show_default=True, callback=_int_list)
@click.option("--reps", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--dense-rows", default=25, show_default=True, type=click.IntRange(min=0))
@click.option("--seed", default=0, show_default=True, type=int)
@reorder_opt
@out_opt
def bench(n_list, cores_list, reps, dense_rows, seed, reordering, out):
    """Time factorization and selected inversion; writes one CSV."""
    stage("bench-config")
    cfgs = [BenchConfig(n, dense_rows, sorted(cores_list), reps, seed, reordering) for n in sorted(set(n_list))]
    records = []
    for cfg in cfgs:
        stage(f"bench/n={cfg.n}")
        records.extend(run_bench(cfg))
    stage("write")
    write_csv(out, records)


def main(argv=None) -> int:
    """Run the CLI and return its exit code."""
    stage("startup")
    try:
        cli.main(args=argv, prog_name="stgmrf", standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except NotPositiveDefinite as exc:
        code = EXIT_NOT_PD
        msg = str(exc)
    except DimensionMismatch as exc:
        code = EXIT_DIMENSION
        msg = str(exc)
    except MemoryCapExceeded as exc:
        code = EXIT_MEMORY
        msg = str(exc)
    except (MatrixMarketError, MeshError, ValueError, OSError) as exc:
        code = EXIT_USAGE
        msg = str(exc)
    except Exception as exc:  # noqa: BLE001
        code = 1
        msg = f"{type(exc).__name__}: {exc}"
    click.echo(f"stgmrf: {_stage[0]}: {msg}", err=True)
    return code


if __name__ == "__main__":
    sys.exit(main())
