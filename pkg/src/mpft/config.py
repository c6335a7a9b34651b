"""Experiment configuration: one flat JSON document per run.

Schema::

    {
      "problem": {"kind": "biquadratic" | "concave_gap" | "tabular", ...},
      "track": {TrackConfig fields},
      "reference_point": [..],        # optional, defaults to the origin
      "output_dir": "out",            # optional
      "svg": true,                    # optional, write front.svg
      "jobs": null                    # optional, worker threads
    }

Everything is validated on load, before any computation starts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mpft.errors import ConfigError, DimensionError
from mpft.problems import Problem, problem_from_dict
from mpft.tracker import TrackConfig

TOP_LEVEL_KEYS = ("problem", "track", "reference_point", "output_dir", "svg", "jobs")


class ConfigFileError(ConfigError):
    """A config problem tied to a location in the source file."""

    def __init__(self, message: str, path: str, line: int | None = None, key: str | None = None):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}", key=key)
        self.path = path
        self.line = line


@dataclass
class ExperimentConfig:
    problem: Problem
    track: TrackConfig
    reference_point: np.ndarray
    output_dir: Path
    svg: bool = True
    jobs: int | None = None
    source: dict | None = None

    def with_overrides(self, *, seed=None, output_dir=None, jobs=None) -> ExperimentConfig:
        """Apply command-line overrides (flag beats config beats default)."""
        track = self.track
        if seed is not None:
            doc = track.to_dict()
            doc["seed"] = int(seed)
            track = TrackConfig.from_dict(doc)
        return ExperimentConfig(
            problem=self.problem,
            track=track,
            reference_point=self.reference_point,
            output_dir=Path(output_dir) if output_dir is not None else self.output_dir,
            svg=self.svg,
            jobs=jobs if jobs is not None else self.jobs,
            source=self.source,
        )


def _key_line(text: str, key: str | None, section: str | None = None) -> int | None:
    """Line of the first ``"key":`` at or after the ``"section":`` line."""
    if not key:
        return None
    lines = text.splitlines()
    start = 0
    if section and section != key:
        start = (_key_line(text, section) or 1) - 1
    pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for n in range(start, len(lines)):
        if pattern.search(lines[n]):
            return n + 1
    return _key_line(text, section) if section else None


def parse_config(text: str, path: str = "<config>", base_dir=None) -> ExperimentConfig:
    """Validate a config document and build the problem and track settings.

    Raises:
        ConfigFileError: With the line of the offending key when it can be
            located.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigFileError(f"invalid JSON: {exc.msg} (column {exc.colno})", path, exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ConfigFileError("top level must be a JSON object", path, 1)

    def fail(message: str, key: str | None, section: str | None = None):
        return ConfigFileError(message, path, _key_line(text, key, section), key)

    unknown = sorted(set(doc) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise fail(f"unknown top-level keys: {unknown}", unknown[0])
    for key in ("problem", "track"):
        if not isinstance(doc.get(key), dict):
            raise fail(f"'{key}' must be an object", key if key in doc else None)

    try:
        problem = problem_from_dict(doc["problem"], base_dir=base_dir)
    except (ConfigError, DimensionError) as exc:
        raise fail(f"problem: {exc}", getattr(exc, "key", None) or "problem", "problem") from exc
    except KeyError as exc:
        raise fail(f"problem: missing setting {exc.args[0]!r}", "problem") from exc
    except (TypeError, ValueError, OSError) as exc:
        raise fail(f"problem: {exc}", "problem") from exc

    try:
        track = TrackConfig.from_dict(doc["track"], m=problem.m)
        track.check_problem(problem)
    except ConfigError as exc:
        raise fail(f"track: {exc}", exc.key or "track", "track") from exc
    except (TypeError, ValueError) as exc:
        raise fail(f"track: {exc}", "track") from exc

    ref = doc.get("reference_point")
    try:
        ref = np.zeros(problem.m) if ref is None else np.asarray(ref, dtype=float)
    except (TypeError, ValueError) as exc:
        raise fail(f"reference_point: {exc}", "reference_point") from exc
    if ref.shape != (problem.m,) or not np.all(np.isfinite(ref)):
        raise fail(f"reference_point must be {problem.m} finite numbers", "reference_point")

    jobs = doc.get("jobs")
    if jobs is not None and (not isinstance(jobs, int) or isinstance(jobs, bool) or jobs < 1):
        raise fail("jobs must be a positive integer", "jobs")
    svg = doc.get("svg", True)
    if not isinstance(svg, bool):
        raise fail("svg must be true or false", "svg")
    out = doc.get("output_dir", "out")
    if not isinstance(out, str):
        raise fail("output_dir must be a string", "output_dir")
    return ExperimentConfig(problem, track, ref, Path(out), svg, jobs, doc)


def load_config(path) -> ExperimentConfig:
    """Read and validate a config file.

    A tabular problem's relative ``path`` resolves next to the config file;
    ``output_dir`` resolves against the working directory.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigFileError(f"cannot read config: {exc.strerror or exc}", str(path)) from exc
    return parse_config(text, str(path), base_dir=path.parent)


__all__ = ["ConfigFileError", "ExperimentConfig", "load_config", "parse_config"]
