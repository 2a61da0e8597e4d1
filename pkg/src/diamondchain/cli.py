"""Command-line front end.

    diamondchain bands --gamma 0.05 --phi pi --out out/
    diamondchain evolve --config run.json
    diamondchain scenario fig7cd --out out/
    diamondchain sweep sweep.json

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 blow-up detected (partial outputs are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import outputs
from .bands import BandSolverError, band_sweep, classify_gaps
from .cls import VARIANTS, ClsSpec, build_cls, cls_residual
from .diagnostics import SpectrumError, finite_spectrum, series_from_amps, support_mask
from .evolve import EvolveConfig, IntegrationFailure, evolve, gaussian_initial
from .model import LatticeState, ModelError, ModelParams

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_BLOWUP = 0, 2, 3, 4
EXPERIMENTS = ("bands", "gap", "cls_check", "evolve", "spectrum")
DEFAULT_MAX_SAMPLES = 2000


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key path."""


# ---------------------------------------------------------------------------
# configuration


_PI_EXPR = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(value, key="model.phi") -> float:
    """Radians from a number or an expression like ``"pi"``, ``"pi/2"``, ``"2pi/3"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_EXPR.match(value)
        if m:
            coef = m.group(1)
            coef = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
            div = float(m.group(2)) if m.group(2) else 1.0
            return coef * math.pi / div
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{key}: cannot parse angle {value!r}")


def _complex(value, key) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(f"{key}: expected a number, [re, im] or complex string, got {value!r}")


_SCHEMA = {
    "experiment": None,
    "model": {"gamma", "e_par", "e_perp", "phi", "n_min", "n_max", "boundary"},
    "bands": {"n_k", "separation_tolerance"},
    "initial": {"kind", "variant", "a0", "anchor", "sigma", "center", "path"},
    "evolve": {"z_end", "dz", "sample_every", "overflow_cap"},
    "spectrum": {"im_tolerance"},
    "output": {"directory", "format", "max_samples"},
}


@dataclass
class RunConfig:
    model: ModelParams
    experiment: str
    initial: dict = field(default_factory=dict)
    evolve_cfg: EvolveConfig | None = None
    n_k: int = 401
    separation_tolerance: float = 1e-6
    im_tolerance: float = 1e-6
    output_dir: Path = Path("out")
    output_format: str = "csv"
    max_samples: int = DEFAULT_MAX_SAMPLES

    def as_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "model": self.model.as_dict(),
            "initial": {k: (str(v) if isinstance(v, (complex, Path)) else v) for k, v in self.initial.items()},
            "bands": {"n_k": self.n_k, "separation_tolerance": self.separation_tolerance},
            "spectrum": {"im_tolerance": self.im_tolerance},
            "output": {"format": self.output_format, "max_samples": self.max_samples},
        }
        if self.evolve_cfg is not None:
            d["evolve"] = self.evolve_cfg.as_dict()
        return d


def _check_keys(doc: dict, allowed, prefix: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a mapping, got {type(doc).__name__}")
    for key in doc:
        if key not in allowed:
            path = f"{prefix}.{key}" if prefix else key
            raise ConfigError(f"{path}: unknown key")


def parse_config(source) -> RunConfig:
    """Validated ``RunConfig`` from a mapping or a JSON file path.

    Unknown keys are errors; missing optional keys take documented defaults
    (fields 0, ``n_k = 401``, lattice ``[-150, 150]``, ``dz = 0.01``).
    """
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON: {exc}") from exc
    else:
        doc = source
    _check_keys(doc, _SCHEMA, "")
    experiment = doc.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: expected one of {EXPERIMENTS}, got {experiment!r}")

    model_doc = doc.get("model", {})
    _check_keys(model_doc, _SCHEMA["model"], "model")
    model_kwargs = dict(model_doc)
    if "phi" in model_kwargs:
        model_kwargs["phi"] = parse_angle(model_kwargs["phi"])
    for key in ("gamma", "e_par", "e_perp"):
        if key in model_kwargs and (isinstance(model_kwargs[key], bool) or not isinstance(model_kwargs[key], (int, float))):
            raise ConfigError(f"model.{key}: expected a number, got {model_kwargs[key]!r}")
    try:
        model = ModelParams(**model_kwargs)
    except ModelError as exc:
        raise ConfigError(f"model: {exc}") from exc

    cfg = RunConfig(model=model, experiment=experiment)

    bands_doc = doc.get("bands", {})
    _check_keys(bands_doc, _SCHEMA["bands"], "bands")
    cfg.n_k = int(bands_doc.get("n_k", 401))
    if cfg.n_k < 16:
        raise ConfigError(f"bands.n_k: must be >= 16, got {cfg.n_k}")
    cfg.separation_tolerance = float(bands_doc.get("separation_tolerance", 1e-6))

    spec_doc = doc.get("spectrum", {})
    _check_keys(spec_doc, _SCHEMA["spectrum"], "spectrum")
    cfg.im_tolerance = float(spec_doc.get("im_tolerance", 1e-6))

    out_doc = doc.get("output", {})
    _check_keys(out_doc, _SCHEMA["output"], "output")
    cfg.output_dir = Path(out_doc.get("directory", "out"))
    cfg.output_format = out_doc.get("format", "csv")
    if cfg.output_format != "csv":
        raise ConfigError(f"output.format: only 'csv' is supported, got {cfg.output_format!r}")
    cfg.max_samples = int(out_doc.get("max_samples", DEFAULT_MAX_SAMPLES))
    if cfg.max_samples < 2:
        raise ConfigError("output.max_samples: must be >= 2")

    if experiment in ("evolve", "cls_check"):
        cfg.initial = _parse_initial(doc.get("initial"), experiment)
    elif "initial" in doc:
        _check_keys(doc["initial"], _SCHEMA["initial"], "initial")

    if experiment == "evolve":
        ev = doc.get("evolve")
        if ev is None or "z_end" not in ev:
            raise ConfigError("evolve.z_end: required for experiment 'evolve'")
        _check_keys(ev, _SCHEMA["evolve"], "evolve")
        dz = float(ev.get("dz", 0.01))
        z_end = float(ev["z_end"])
        n_steps = max(1, math.ceil(z_end / dz - 1e-9)) if dz > 0 else 1
        sample_every = ev.get("sample_every", max(1, math.ceil(n_steps / cfg.max_samples)))
        try:
            cfg.evolve_cfg = EvolveConfig(
                z_end=z_end,
                dz=dz,
                sample_every=sample_every,
                overflow_cap=float(ev.get("overflow_cap", 1e12)),
            )
        except ModelError as exc:
            raise ConfigError(f"evolve: {exc}") from exc
    elif "evolve" in doc:
        _check_keys(doc["evolve"], _SCHEMA["evolve"], "evolve")

    if experiment in ("bands", "gap") and model.e_par != 0:
        raise ConfigError("model.e_par: band structure needs e_par == 0")
    if experiment == "cls_check" and model.e_par != 0:
        raise ConfigError("model.e_par: cls_check needs e_par == 0")
    if cfg.initial.get("kind") == "cls":
        try:
            build_cls(_cls_spec(cfg.initial), model.with_(e_par=0.0))
        except ModelError as exc:
            raise ConfigError(f"initial: {exc}") from exc
    return cfg


def _parse_initial(doc, experiment) -> dict:
    if doc is None:
        raise ConfigError(f"initial: required for experiment {experiment!r}")
    _check_keys(doc, _SCHEMA["initial"], "initial")
    kind = doc.get("kind")
    if experiment == "cls_check" and kind != "cls":
        raise ConfigError("initial.kind: cls_check needs a 'cls' initial state")
    if kind == "cls":
        allowed = {"kind", "variant", "a0", "anchor"}
        out = {
            "kind": "cls",
            "variant": doc.get("variant", "two_site_phipi"),
            "a0": _complex(doc.get("a0", 1.0), "initial.a0"),
            "anchor": int(doc.get("anchor", 0)),
        }
        if out["variant"] not in VARIANTS:
            raise ConfigError(f"initial.variant: expected one of {VARIANTS}, got {out['variant']!r}")
    elif kind == "gaussian":
        allowed = {"kind", "sigma", "center"}
        out = {"kind": "gaussian", "sigma": float(doc.get("sigma", 70.0)), "center": float(doc.get("center", 0.0))}
        if not out["sigma"] > 0:
            raise ConfigError(f"initial.sigma: must be positive, got {out['sigma']}")
    elif kind == "custom":
        allowed = {"kind", "path"}
        if "path" not in doc:
            raise ConfigError("initial.path: required for kind 'custom'")
        out = {"kind": "custom", "path": Path(doc["path"])}
    else:
        raise ConfigError(f"initial.kind: expected 'cls', 'gaussian' or 'custom', got {kind!r}")
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"initial.{key}: not valid for kind {kind!r}")
    return out


def _cls_spec(initial: dict) -> ClsSpec:
    return ClsSpec(initial["variant"], initial["a0"], initial["anchor"])


def initial_state(cfg: RunConfig):
    kind = cfg.initial["kind"]
    if kind == "cls":
        # the flat-band eigenmode of the untilted lattice, then propagated with the tilt
        return build_cls(_cls_spec(cfg.initial), cfg.model.with_(e_par=0.0))
    if kind == "gaussian":
        return gaussian_initial(cfg.model, cfg.initial["sigma"], cfg.initial["center"])
    return outputs.read_state(cfg.initial["path"], cfg.model)


# ---------------------------------------------------------------------------
# scenarios

PI = math.pi

# Preset parameter sets.  Lattice extent n in [-150, 150] throughout; the
# propagation lengths (100, 500, 2000) are choices, not fixed by the presets.
SCENARIOS = {
    # flat-band bands: phi = pi, E_par = E_perp = 0, gamma = 0.05
    "fig2_bands": {"bands": {"experiment": "bands", "model": {"gamma": 0.05, "phi": PI}}},
    # CLS initial condition with A0 = 1, no external fields
    "fig2c_cls": {
        "evolve": {
            "experiment": "evolve",
            "model": {"gamma": 0.05, "phi": PI},
            "initial": {"kind": "cls", "variant": "two_site_phipi", "a0": 1.0},
            "evolve": {"z_end": 100.0},
        }
    },
    # tilted flat-band lattice: gamma = 0.05, phi = pi; E_par = 0.05 (a, b) or 0.1 (c, d);
    # a, c start from the CLS, b, d from a Gaussian with sigma = 70
    "fig3a": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI, "e_par": 0.05},
                         "initial": {"kind": "cls", "variant": "two_site_phipi"}, "evolve": {"z_end": 500.0}}},
    "fig3b": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI, "e_par": 0.05},
                         "initial": {"kind": "gaussian", "sigma": 70.0}, "evolve": {"z_end": 500.0}}},
    "fig3c": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI, "e_par": 0.1},
                         "initial": {"kind": "cls", "variant": "two_site_phipi"}, "evolve": {"z_end": 500.0}}},
    "fig3d": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI, "e_par": 0.1},
                         "initial": {"kind": "gaussian", "sigma": 70.0}, "evolve": {"z_end": 500.0}}},
    # detuned legs: gamma = 0.05, phi = pi, E_par = 0; E_perp = 0.01 or 0.05
    "fig4": {
        "eperp_0.01": {"experiment": "bands", "model": {"gamma": 0.05, "phi": PI, "e_perp": 0.01}},
        "eperp_0.05": {"experiment": "bands", "model": {"gamma": 0.05, "phi": PI, "e_perp": 0.05}},
    },
    # both fields: E_par = 0.1, phi = pi, gamma = 0.05; E_perp = 0.01 (cd) or 0.05 (ef)
    "fig5cd": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI, "e_par": 0.1, "e_perp": 0.01},
                          "initial": {"kind": "cls", "variant": "two_site_phipi_eperp"}, "evolve": {"z_end": 2000.0}}},
    "fig5ef": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI, "e_par": 0.1, "e_perp": 0.05},
                          "initial": {"kind": "cls", "variant": "two_site_phipi_eperp"}, "evolve": {"z_end": 2000.0}}},
    # dispersive bands: gamma = 0.05, E_par = E_perp = 0; phi = pi/2, pi/3, pi/4
    "fig6": {
        "phi_pi_2": {"experiment": "bands", "model": {"gamma": 0.05, "phi": PI / 2}},
        "phi_pi_3": {"experiment": "bands", "model": {"gamma": 0.05, "phi": PI / 3}},
        "phi_pi_4": {"experiment": "bands", "model": {"gamma": 0.05, "phi": PI / 4}},
    },
    # Gaussian sigma = 70, phi = pi/2, gamma = 0.05, E_perp = 0; E_par = 0.05 (a) or 0.1 (b)
    "fig7a": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI / 2, "e_par": 0.05},
                         "initial": {"kind": "gaussian", "sigma": 70.0}, "evolve": {"z_end": 500.0}}},
    "fig7b": {"evolve": {"experiment": "evolve", "model": {"gamma": 0.05, "phi": PI / 2, "e_par": 0.1},
                         "initial": {"kind": "gaussian", "sigma": 70.0}, "evolve": {"z_end": 500.0}}},
    # finite spectrum of 903 sites (301 cells) with the same parameters as scenario fig7a
    "fig7cd": {"spectrum": {"experiment": "spectrum", "model": {"gamma": 0.05, "phi": PI / 2, "e_par": 0.05}}},
}


def scenario_configs(name: str, out_root: Path) -> list[RunConfig]:
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}")
    runs = SCENARIOS[name]
    configs = []
    for tag, doc in runs.items():
        doc = json.loads(json.dumps(doc))
        directory = Path(out_root) / name
        if len(runs) > 1:
            directory = directory / tag
        doc.setdefault("output", {})["directory"] = str(directory)
        configs.append(parse_config(doc))
    return configs


# ---------------------------------------------------------------------------
# running


def _base_meta(cfg: RunConfig, **extra) -> dict:
    meta = {"config": cfg.as_dict(), "params": cfg.model.as_dict()}
    meta.update(extra)
    return meta


def write_outputs(cfg: RunConfig, result) -> list[Path]:
    """Serialize a finished bands / gap / cls_check / spectrum result."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if cfg.experiment == "bands":
        return [outputs.write_bands(out / "bands.csv", result, _base_meta(cfg))]
    if cfg.experiment == "gap":
        sweep, report = result
        payload = {
            "has_flat_band": report.has_flat_band,
            "is_gapless": report.is_gapless,
            "min_separation": report.min_separation,
            "grid_min_separation": report.grid_min_separation,
            "gamma_c": report.gamma_c,
            "flat_band": report.flat_band,
            "separation_tolerance": report.separation_tolerance,
            "touching_points": [
                {"k": t.k, "k_prime": t.k_prime, "separation": t.separation, "value": [t.value.real, t.value.imag]}
                for t in report.touching_points
            ],
        }
        files = [outputs.write_json(out / "gap.json", payload, _base_meta(cfg))]
        files.append(outputs.write_bands(out / "bands.csv", sweep, _base_meta(cfg)))
        return files
    if cfg.experiment == "cls_check":
        state, residual = result
        files = [outputs.write_state(out / "cls_state.csv", state, _base_meta(cfg))]
        files.append(outputs.write_json(out / "cls_check.json", {"residual": residual, "null_mode": residual < 1e-12}, _base_meta(cfg)))
        return files
    if cfg.experiment == "spectrum":
        return [outputs.write_spectrum(out / "spectrum.csv", result, cfg.model, _base_meta(cfg))]
    raise ConfigError(f"write_outputs does not handle {cfg.experiment!r}; evolve streams its own files")


def _run_evolve(cfg: RunConfig, progress: bool = False) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    init = initial_state(cfg)
    params = cfg.model
    mask = support_mask(init.amps)
    cells = params.cells
    count = [0]

    intensity_path = out / "intensity.csv"
    diag_path = out / "diagnostics.csv"
    with outputs.CsvSink(intensity_path, outputs.INTENSITY_HEADER) as isink, outputs.CsvSink(
        diag_path, outputs.DIAGNOSTICS_HEADER
    ) as dsink:

        def on_sample(z, amps):
            with np.errstate(over="ignore"):
                rho = (np.abs(amps) ** 2).sum(axis=1)
            for n, r in zip(cells, rho):
                isink.row([z, int(n), r])
            dsink.rows(series_from_amps([z], amps[None], cells, mask).rows())
            count[0] += 1
            last[0] = (z, amps.copy())
            if progress:
                print(f"\rsample {count[0]}  z={z:.2f}", end="", file=sys.stderr)

        last = [None]
        status, z_stop, meta_int, error = "completed", None, {}, None
        try:
            traj = evolve(init, params, cfg.evolve_cfg, on_sample=on_sample, keep_samples=False)
            status, z_stop, meta_int = traj.status, traj.z_stop, traj.integrator_meta
        except IntegrationFailure as exc:
            status, z_stop, error = "integration_failure", exc.last_good_z, str(exc)
    if progress:
        print(file=sys.stderr)

    run_meta = _base_meta(
        cfg,
        integrator=meta_int,
        status=status,
        z_stop=z_stop,
        samples=count[0],
        initial=cfg.initial.get("kind"),
        excited_sites=[[int(cells[j]), "abc"[leg]] for j, leg in np.argwhere(mask)] if mask.sum() <= 64 else "support of initial state",
    )
    if error:
        run_meta["error"] = error
    outputs.write_metadata(intensity_path, run_meta)
    outputs.write_metadata(diag_path, run_meta)
    outputs.write_state(out / "initial_state.csv", init, _base_meta(cfg))
    if last[0] is not None:
        z, amps = last[0]
        outputs.write_state(out / "final_state.csv", LatticeState(amps, params.n_min, z), run_meta)
    if status == "blew_up":
        return EXIT_BLOWUP
    if status == "integration_failure":
        return EXIT_NUMERICAL
    return EXIT_OK


def run_config(cfg: RunConfig, progress: bool = False) -> int:
    """Execute one validated configuration; returns the process exit code."""
    try:
        if cfg.experiment == "bands":
            write_outputs(cfg, band_sweep(cfg.model, cfg.n_k))
        elif cfg.experiment == "gap":
            sweep = band_sweep(cfg.model, cfg.n_k)
            write_outputs(cfg, (sweep, classify_gaps(sweep, cfg.separation_tolerance)))
        elif cfg.experiment == "cls_check":
            state = build_cls(_cls_spec(cfg.initial), cfg.model)
            write_outputs(cfg, (state, cls_residual(state, cfg.model)))
        elif cfg.experiment == "spectrum":
            write_outputs(cfg, finite_spectrum(cfg.model, cfg.im_tolerance))
        else:
            return _run_evolve(cfg, progress)
    except (BandSolverError, SpectrumError, IntegrationFailure, np.linalg.LinAlgError) as exc:
        logger.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK


def run_scenario(name: str, out_root: Path = Path("out"), progress: bool = False) -> int:
    codes = [run_config(cfg, progress) for cfg in scenario_configs(name, out_root)]
    return max(codes)


def run_sweep(path, workers: int | None = None) -> int:
    """Run the entries of a sweep file concurrently, each into its own directory.

    The file holds ``{"output": dir, "workers": n, "runs": [...]}`` where each
    run is ``{"scenario": name}`` or a full run configuration.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from exc
    _check_keys(doc, {"output", "workers", "runs"}, "")
    root = Path(doc.get("output", "out"))
    jobs = []
    for i, entry in enumerate(doc.get("runs", [])):
        if isinstance(entry, dict) and set(entry) == {"scenario"}:
            jobs.append(("scenario", entry["scenario"], root))
        else:
            entry = json.loads(json.dumps(entry))
            entry.setdefault("output", {}).setdefault("directory", str(root / f"run_{i:03d}"))
            try:
                jobs.append(("config", parse_config(entry), None))
            except ConfigError as exc:
                raise ConfigError(f"runs[{i}].{exc}") from exc
    for kind, item, _ in jobs:
        if kind == "scenario" and item not in SCENARIOS:
            raise ConfigError(f"unknown scenario {item!r}")

    def work(job):
        kind, item, out = job
        return run_scenario(item, out) if kind == "scenario" else run_config(item)

    with ThreadPoolExecutor(max_workers=workers or doc.get("workers", 1)) as pool:
        codes = list(pool.map(work, jobs))
    return max(codes, default=EXIT_OK)


# ---------------------------------------------------------------------------
# argument parsing


def _add_model_flags(p):
    p.add_argument("--config", type=Path, help="JSON run configuration; flags override its values")
    p.add_argument("--gamma", type=float)
    p.add_argument("--e-par", type=float)
    p.add_argument("--e-perp", type=float)
    p.add_argument("--phi", help="radians, or expressions like pi, pi/2, 2pi/3")
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--out", type=Path, help="output directory")


def _add_initial_flags(p, cls_only=False):
    if not cls_only:
        p.add_argument("--initial", choices=["cls", "gaussian", "custom"])
        p.add_argument("--sigma", type=float)
        p.add_argument("--center", type=float)
        p.add_argument("--state-file", type=Path)
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--a0", help="complex amplitude, e.g. 1 or 2j")
    p.add_argument("--anchor", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diamondchain", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("bands", "gap"):
        p = sub.add_parser(name, help=f"{name} of the Bloch spectrum")
        _add_model_flags(p)
        p.add_argument("--n-k", type=int)
        if name == "gap":
            p.add_argument("--separation-tolerance", type=float)

    p = sub.add_parser("cls-check", help="build a compact localized state and check it is a null mode")
    _add_model_flags(p)
    _add_initial_flags(p, cls_only=True)

    p = sub.add_parser("evolve", help="propagate an initial state along z")
    _add_model_flags(p)
    _add_initial_flags(p)
    p.add_argument("--z-end", type=float)
    p.add_argument("--dz", type=float)
    p.add_argument("--sample-every", type=int)
    p.add_argument("--overflow-cap", type=float)
    p.add_argument("--max-samples", type=int)
    p.add_argument("--progress", action="store_true", help="sample counter on stderr")

    p = sub.add_parser("spectrum", help="finite-lattice eigenvalues of -H")
    _add_model_flags(p)
    p.add_argument("--im-tolerance", type=float)

    p = sub.add_parser("scenario", help="figure presets")
    p.add_argument("name", choices=sorted(SCENARIOS))
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--progress", action="store_true")

    p = sub.add_parser("sweep", help="run several configurations concurrently")
    p.add_argument("config", type=Path)
    p.add_argument("--workers", type=int)
    return parser


def config_from_args(args) -> RunConfig:
    experiment = args.command.replace("-", "_")
    doc = {}
    if getattr(args, "config", None) is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a mapping")
    doc["experiment"] = experiment

    def put(section, key, value):
        if value is not None:
            doc.setdefault(section, {})[key] = value

    put("model", "gamma", args.gamma)
    put("model", "e_par", args.e_par)
    put("model", "e_perp", args.e_perp)
    put("model", "phi", args.phi)
    put("model", "n_min", args.n_min)
    put("model", "n_max", args.n_max)
    if args.out is not None:
        put("output", "directory", str(args.out))
    put("bands", "n_k", getattr(args, "n_k", None))
    put("bands", "separation_tolerance", getattr(args, "separation_tolerance", None))
    put("spectrum", "im_tolerance", getattr(args, "im_tolerance", None))
    if experiment == "cls_check":
        put("initial", "kind", "cls")
    put("initial", "kind", getattr(args, "initial", None))
    put("initial", "sigma", getattr(args, "sigma", None))
    put("initial", "center", getattr(args, "center", None))
    if getattr(args, "state_file", None) is not None:
        put("initial", "path", str(args.state_file))
    put("initial", "variant", getattr(args, "variant", None))
    put("initial", "a0", getattr(args, "a0", None))
    put("initial", "anchor", getattr(args, "anchor", None))
    put("evolve", "z_end", getattr(args, "z_end", None))
    put("evolve", "dz", getattr(args, "dz", None))
    put("evolve", "sample_every", getattr(args, "sample_every", None))
    put("evolve", "overflow_cap", getattr(args, "overflow_cap", None))
    put("output", "max_samples", getattr(args, "max_samples", None))
    return parse_config(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "scenario":
            return run_scenario(args.name, args.out, args.progress)
        if args.command == "sweep":
            return run_sweep(args.config, args.workers)
        cfg = config_from_args(args)
        return run_config(cfg, getattr(args, "progress", False))
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
