"""Command-line client for the tomography service.

Subcommands mirror the pipeline stages (design, simulate, estimate, analyze,
rb, pipeline); each talks to the HTTP service — in-process by default, or a
remote instance via --server — and writes the JSON/CSV artifacts.

Configuration precedence, highest first: config file, command-line flags,
the GST_SEED environment variable (seed only), built-in defaults.  The
merged configuration is echoed to <output-dir>/config.json on every run.
"""

import os
import warnings
from pathlib import Path

import click

from . import __version__
from .jsonio import load as load_json, save as save_json
from .noise import CountRecord, save_counts
from .pipeline import DEFAULT_CONFIG
from .rb import save_survivals_csv

NOISE_KEYS = (
    "depolarizing",
    "t1_01",
    "t1_12",
    "t2_01",
    "t2_12",
    "gate_time",
    "spam_error",
)


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=3600.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise click.ClickException(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _require_file(path, role: str) -> str:
    if path is None:
        raise click.UsageError(f"missing required {role} file")
    if not os.path.exists(path):
        raise click.UsageError(f"{role} file does not exist: {path}")
    return str(path)


def _parse_overrotation(pairs) -> dict:
    out = {}
    for item in pairs:
        gate, _, value = item.partition("=")
        if not value:
            raise click.UsageError(
                f"--overrotation expects GATE=RADIANS, got {item!r}"
            )
        out[gate] = float(value)
    return out


def _parse_lengths(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise click.UsageError(f"bad length list {text!r}") from None


def merged_config(config_path, flags: dict, noise_flags: dict) -> dict:
    """defaults < GST_SEED < explicit flags < config file, per key."""
    cfg = dict(DEFAULT_CONFIG)
    env_seed = os.environ.get("GST_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise click.UsageError(f"GST_SEED is not an integer: {env_seed!r}")

    noise = {k: v for k, v in noise_flags.items() if v not in (None, (), {})}
    for key, value in flags.items():
        if value is not None:
            cfg[key] = value

    if config_path is not None:
        _require_file(config_path, "config")
        file_cfg = load_json(config_path)
        file_noise = file_cfg.pop("noise", None)
        cfg.update(file_cfg)
        if file_noise is not None:
            noise.update(file_noise)
    cfg["noise"] = noise
    return cfg


def _echo_config(output_dir: str, cfg: dict) -> None:
    os.makedirs(output_dir, exist_ok=True)
    save_json(Path(output_dir) / "config.json", cfg)


def _write_counts_csv(path, count_dicts: list[dict]) -> None:
    records = [
        CountRecord(
            circuit_id=int(r["circuit_id"]),
            counts=tuple(int(c) for c in r["counts"]),
            shots=int(r["shots"]),
        )
        for r in count_dicts
    ]
    save_counts(path, records)


def _load_counts_json(path) -> list[dict]:
    from .noise import load_counts

    return [
        {"circuit_id": r.circuit_id, "counts": list(r.counts), "shots": r.shots}
        for r in load_counts(path)
    ]


_common = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="JSON config file; its values override flags."),
    click.option("--output-dir", default=None, help="Artifact directory."),
    click.option("--server", default=None, metavar="URL",
                 help="Remote service URL (default: run in-process)."),
    click.option("--threads", type=int, default=None,
                 help="Worker threads for per-gate analysis."),
]

_noise_opts = [
    click.option("--depolarizing", type=float, default=None),
    click.option("--t1-01", "t1_01", type=float, default=None),
    click.option("--t1-12", "t1_12", type=float, default=None),
    click.option("--t2-01", "t2_01", type=float, default=None),
    click.option("--t2-12", "t2_12", type=float, default=None),
    click.option("--gate-time", "gate_time", type=float, default=None,
                 help="Gate duration in nanoseconds."),
    click.option("--spam-error", "spam_error", type=float, default=None),
    click.option("--overrotation", multiple=True, metavar="GATE=RADIANS",
                 help="Coherent overrotation per gate; repeatable."),
]


def _add(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


def _noise_dict(kwargs) -> dict:
    noise = {k: kwargs.pop(k) for k in NOISE_KEYS}
    over = _parse_overrotation(kwargs.pop("overrotation"))
    if over:
        noise["overrotation"] = over
    return noise


def _out_dir(cfg: dict) -> str:
    return str(cfg.get("output_dir") or "gst-output")


@click.group()
@click.version_option(version=__version__, prog_name="qutrit-gst")
def main():
    """Qutrit gate-set tomography and randomized benchmarking."""


@main.command()
@click.option("--gateset", "gateset_path", type=click.Path(), default=None,
              help="Gate-set JSON (default: built-in native set).")
@click.option("--minimal-fiducials/--full-fiducials", default=None)
@click.option("--max-length", type=int, default=None)
@_add(_common)
def design(gateset_path, minimal_fiducials, max_length, config_path,
           output_dir, server, threads):
    """Select fiducials and write the experiment design."""
    cfg = merged_config(config_path, {
        "gateset_path": gateset_path,
        "minimal_fiducials": minimal_fiducials,
        "max_length": max_length,
        "output_dir": output_dir,
        "threads": threads,
    }, {})
    gateset = None
    if cfg.get("gateset_path"):
        gateset = load_json(_require_file(cfg["gateset_path"], "gate-set"))
    out = _out_dir(cfg)
    with _client(server) as client:
        resp = _post(client, "/design", {
            "gateset": gateset,
            "minimal_fiducials": cfg["minimal_fiducials"],
            "max_length": cfg["max_length"],
        })
    _echo_config(out, cfg)
    save_json(Path(out) / "design.json", resp["design"])
    s = resp["summary"]
    click.echo(f"prep fiducials: {s['n_prep_fiducials']}")
    click.echo(f"meas fiducials: {s['n_meas_fiducials']}")
    click.echo(f"germs: {s['n_germs']}  circuits: {s['n_circuits']}")
    cond = s["conditioning"]
    click.echo(f"prep sigma_min: {cond['prep_sigma_min']:.6f}  "
               f"meas sigma_min: {cond['meas_sigma_min']:.6f}")
    click.echo(f"wrote {out}/design.json")


@main.command()
@click.option("--design", "design_path", type=click.Path(), default=None,
              required=False, help="Design JSON from the design step.")
@click.option("--gateset", "gateset_path", type=click.Path(), default=None)
@click.option("--shots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_add(_noise_opts)
@_add(_common)
def simulate(design_path, gateset_path, shots, seed, config_path, output_dir,
             server, threads, **noise_kwargs):
    """Sample outcome counts from the noisy model on a design."""
    cfg = merged_config(config_path, {
        "design_path": design_path,
        "gateset_path": gateset_path,
        "shots": shots,
        "seed": seed,
        "output_dir": output_dir,
        "threads": threads,
    }, _noise_dict(noise_kwargs))
    design_payload = load_json(_require_file(cfg.get("design_path"), "design"))
    gateset = None
    if cfg.get("gateset_path"):
        gateset = load_json(_require_file(cfg["gateset_path"], "gate-set"))
    out = _out_dir(cfg)
    with _client(server) as client:
        resp = _post(client, "/simulate", {
            "design": design_payload,
            "gateset": gateset,
            "noise": cfg["noise"],
            "shots": cfg["shots"],
            "seed": cfg["seed"],
        })
    _echo_config(out, cfg)
    _write_counts_csv(Path(out) / "counts.csv", resp["counts"])
    click.echo(f"sampled {len(resp['counts'])} circuits at {cfg['shots']} shots")
    click.echo(f"wrote {out}/counts.csv")


@main.command()
@click.option("--design", "design_path", type=click.Path(), default=None)
@click.option("--counts", "counts_path", type=click.Path(), default=None)
@click.option("--gateset", "gateset_path", type=click.Path(), default=None,
              help="Target gate set for seeding and gauge (default native).")
@click.option("--max-iter", type=int, default=None)
@_add(_common)
def estimate(design_path, counts_path, gateset_path, max_iter, config_path,
             output_dir, server, threads):
    """Reconstruct the gate set from counts (LGST + MLE + gauge)."""
    cfg = merged_config(config_path, {
        "design_path": design_path,
        "counts_path": counts_path,
        "gateset_path": gateset_path,
        "max_iter": max_iter,
        "output_dir": output_dir,
        "threads": threads,
    }, {})
    design_payload = load_json(_require_file(cfg.get("design_path"), "design"))
    counts = _load_counts_json(_require_file(cfg.get("counts_path"), "counts"))
    gateset = None
    if cfg.get("gateset_path"):
        gateset = load_json(_require_file(cfg["gateset_path"], "gate-set"))
    out = _out_dir(cfg)
    with _client(server) as client:
        resp = _post(client, "/estimate", {
            "design": design_payload,
            "counts": counts,
            "gateset": gateset,
            "max_iter": cfg["max_iter"],
        })
    _echo_config(out, cfg)
    save_json(Path(out) / "estimate.json", resp["estimate"])
    est = resp["estimate"]
    click.echo(f"loglike: {est['loglike']:.4f}  iterations: {est['iterations']}")
    click.echo(f"wrote {out}/estimate.json")


@main.command()
@click.option("--estimate", "estimate_path", type=click.Path(), default=None)
@click.option("--gateset", "gateset_path", type=click.Path(), default=None)
@_add(_common)
def analyze(estimate_path, gateset_path, config_path, output_dir, server,
            threads):
    """Error generators, coefficients, p_H, and infidelity per gate."""
    cfg = merged_config(config_path, {
        "estimate_path": estimate_path,
        "gateset_path": gateset_path,
        "output_dir": output_dir,
        "threads": threads,
    }, {})
    est_payload = load_json(_require_file(cfg.get("estimate_path"), "estimate"))
    gateset = None
    if cfg.get("gateset_path"):
        gateset = load_json(_require_file(cfg["gateset_path"], "gate-set"))
    out = _out_dir(cfg)
    with _client(server) as client:
        resp = _post(client, "/analyze", {
            "estimate": est_payload,
            "gateset": gateset,
            "threads": cfg["threads"],
        })
    _echo_config(out, cfg)
    save_json(Path(out) / "analysis.json", {"schema": 1, "gates": resp["gates"]})
    for label, g in resp["gates"].items():
        p_h = "n/a" if g["p_h"] is None else f"{g['p_h']:.4f}"
        click.echo(f"{label}: infidelity {g['infidelity']:.3e}  p_H {p_h}")
    click.echo(f"wrote {out}/analysis.json")


@main.command()
@click.option("--gateset", "gateset_path", type=click.Path(), default=None)
@click.option("--rb-lengths", default=None, metavar="M1,M2,...")
@click.option("--rb-sequences", "rb_sequences_per_length", type=int, default=None)
@click.option("--rb-shots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_add(_noise_opts)
@_add(_common)
def rb(gateset_path, rb_lengths, rb_sequences_per_length, rb_shots, seed,
       config_path, output_dir, server, threads, **noise_kwargs):
    """Randomized benchmarking on the noisy model."""
    cfg = merged_config(config_path, {
        "gateset_path": gateset_path,
        "rb_lengths": _parse_lengths(rb_lengths) if rb_lengths else None,
        "rb_sequences_per_length": rb_sequences_per_length,
        "rb_shots": rb_shots,
        "seed": seed,
        "output_dir": output_dir,
        "threads": threads,
    }, _noise_dict(noise_kwargs))
    gateset = None
    if cfg.get("gateset_path"):
        gateset = load_json(_require_file(cfg["gateset_path"], "gate-set"))
    out = _out_dir(cfg)
    with _client(server) as client:
        resp = _post(client, "/rb", {
            "gateset": gateset,
            "noise": cfg["noise"],
            "lengths": cfg["rb_lengths"],
            "sequences_per_length": cfg["rb_sequences_per_length"],
            "shots": cfg["rb_shots"],
            "seed": cfg["seed"],
        })
    _echo_config(out, cfg)
    payload = resp["rb"]
    survivals = {int(m): vals for m, vals in payload.pop("survivals").items()}
    save_survivals_csv(Path(out) / "rb.csv", survivals)
    save_json(Path(out) / "rb_fit.json", payload)
    fit = payload["fit"]
    click.echo(f"A={fit['A']:.4f}  B={fit['B']:.4f}  p={fit['p']:.6f}")
    click.echo(f"infidelity per Clifford: {payload['infidelity']:.6e}")
    click.echo(f"wrote {out}/rb.csv and {out}/rb_fit.json")


@main.command()
@click.option("--shots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--minimal-fiducials/--full-fiducials", default=None)
@click.option("--max-length", type=int, default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--rb-lengths", default=None, metavar="M1,M2,...")
@click.option("--rb-sequences", "rb_sequences_per_length", type=int, default=None)
@click.option("--rb-shots", type=int, default=None)
@_add(_noise_opts)
@_add(_common)
def pipeline(shots, seed, minimal_fiducials, max_length, max_iter, rb_lengths,
             rb_sequences_per_length, rb_shots, config_path, output_dir,
             server, threads, **noise_kwargs):
    """Full run: design, simulate, estimate, analyze, rb, report."""
    cfg = merged_config(config_path, {
        "shots": shots,
        "seed": seed,
        "minimal_fiducials": minimal_fiducials,
        "max_length": max_length,
        "max_iter": max_iter,
        "rb_lengths": _parse_lengths(rb_lengths) if rb_lengths else None,
        "rb_sequences_per_length": rb_sequences_per_length,
        "rb_shots": rb_shots,
        "output_dir": output_dir,
        "threads": threads,
    }, _noise_dict(noise_kwargs))
    out = _out_dir(cfg)
    request_cfg = {k: v for k, v in cfg.items() if k != "output_dir"}
    with _client(server) as client:
        resp = _post(client, "/pipeline", {"config": request_cfg})
    _echo_config(out, cfg)
    save_json(Path(out) / "design.json", resp["design"])
    _write_counts_csv(Path(out) / "counts.csv", resp["counts"])
    save_json(Path(out) / "estimate.json", resp["estimate"])
    survivals = {int(m): vals for m, vals in resp["rb_survivals"].items()}
    save_survivals_csv(Path(out) / "rb.csv", survivals)
    report = resp["report"]
    save_json(Path(out) / "report.json", report)
    for label, g in report["gates"].items():
        click.echo(f"{label}: infidelity {g['infidelity']:.3e}")
    comp = report["comparison"]
    click.echo(f"RB infidelity: {comp['rb_infidelity']:.6e}  "
               f"GST mean Clifford infidelity: {comp['gst_mean_clifford_infidelity']:.6e}")
    click.echo(f"wrote {out}/report.json")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
