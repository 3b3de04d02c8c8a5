"""Experiment configuration files.

Configs are JSON documents:

    {
      "experiment": "ratios",          // one of the registered kinds
      "name": "my_run",                // optional; output file stem
      "seed": 1,                       // optional, default 0
      "output": "results",             // optional output directory
      "params": { ... }                // kind-specific parameters
    }

`load` reports parse failures with line numbers; `validate` reports every
semantic violation with the offending field path.  Numeric grids may be
given either as {"values": [...]} or as {"start": a, "stop": b, "step": s}
(inclusive of the endpoint up to rounding).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class ConfigError(Exception):
    """Invalid configuration; `errors` holds one message per violation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class Config:
    experiment: str
    params: dict
    seed: int = 0
    name: str | None = None
    output: str | None = None
    path: Path | None = None

    @property
    def stem(self) -> str:
        return self.name or self.experiment.replace("-", "_")


def load(path) -> Config:
    """Parse a config file; syntax errors carry the offending line number."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object, got {type(raw).__name__}"])

    errors = []
    experiment = raw.get("experiment")
    if not isinstance(experiment, str):
        errors.append("experiment: required string naming the experiment kind")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        errors.append("params: must be an object")
        params = {}
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append("seed: must be a non-negative integer")
        seed = 0
    name = raw.get("name")
    if name is not None and not isinstance(name, str):
        errors.append("name: must be a string")
        name = None
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        errors.append("output: must be a string")
        output = None
    known = {"experiment", "params", "seed", "name", "output"}
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown top-level field")
    if errors:
        raise ConfigError(errors)
    return Config(experiment=experiment, params=params, seed=seed, name=name, output=output, path=path)


class ParamChecker:
    """Collects field-path error messages while reading a params dict."""

    def __init__(self, params: dict, prefix: str = "params"):
        self.params = params
        self.prefix = prefix
        self.errors: list[str] = []
        self.seen: set[str] = set()

    def fail(self, path, message):
        self.errors.append(f"{self.prefix}.{path}: {message}")

    def finish_unknown(self):
        for key in sorted(set(self.params) - self.seen):
            self.fail(key, "unknown parameter")

    def _get(self, key, default=None):
        self.seen.add(key)
        return self.params.get(key, default)

    def integer(self, key, default=None, minimum=None, maximum=None, required=False):
        val = self._get(key, default)
        if val is None:
            if required:
                self.fail(key, "required")
            return default
        if not isinstance(val, int) or isinstance(val, bool):
            self.fail(key, f"must be an integer, got {val!r}")
            return default
        if minimum is not None and val < minimum:
            self.fail(key, f"must be >= {minimum}, got {val}")
            return default
        if maximum is not None and val > maximum:
            self.fail(key, f"must be <= {maximum}, got {val}")
            return default
        return val

    def number(self, key, path, val, lo=None, hi=None, lo_open=False, hi_open=False):
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            self.fail(path, f"must be a number, got {val!r}")
            return None
        val = float(val)
        if lo is not None and (val <= lo if lo_open else val < lo):
            self.fail(path, f"must be {'>' if lo_open else '>='} {lo}, got {val}")
            return None
        if hi is not None and (val >= hi if hi_open else val > hi):
            self.fail(path, f"must be {'<' if hi_open else '<='} {hi}, got {val}")
            return None
        return val

    def probability(self, key, required=False, hi_open=False, default=None):
        val = self._get(key, default)
        if val is None:
            if required:
                self.fail(key, "required")
            return None
        return self.number(key, key, val, lo=0.0, hi=1.0, hi_open=hi_open)

    def probability_list(self, key, required=False, hi_open=False, min_len=1, exact_len=None):
        val = self._get(key)
        if val is None:
            if required:
                self.fail(key, "required")
            return None
        if not isinstance(val, list) or len(val) < min_len:
            self.fail(key, f"must be a list of at least {min_len} probabilities")
            return None
        if exact_len is not None and len(val) != exact_len:
            self.fail(key, f"must have exactly {exact_len} entries, got {len(val)}")
            return None
        out = []
        for i, v in enumerate(val):
            num = self.number(key, f"{key}[{i}]", v, lo=0.0, hi=1.0, hi_open=hi_open)
            out.append(num if num is not None else 0.0)
        return out

    def sorted_triples(self, key, required=True):
        val = self._get(key)
        if val is None:
            if required:
                self.fail(key, "required")
            return None
        if not isinstance(val, list) or not val:
            self.fail(key, "must be a non-empty list of 3-element lists")
            return None
        out = []
        for i, triple in enumerate(val):
            if not isinstance(triple, list) or len(triple) != 3:
                self.fail(f"{key}[{i}]", "must be a 3-element list")
                continue
            nums = []
            for j, v in enumerate(triple):
                num = self.number(key, f"{key}[{i}][{j}]", v, lo=0.0, hi=1.0, hi_open=True)
                nums.append(num if num is not None else 0.0)
            if nums != sorted(nums):
                self.fail(f"{key}[{i}]", f"error probabilities must be sorted ascending, got {triple}")
                continue
            out.append(tuple(nums))
        return out

    def grid(self, key, required=False, lo=0.0, hi=1.0, hi_open=False):
        """A numeric grid: {"values": [...]} or {"start","stop","step"}."""
        val = self._get(key)
        if val is None:
            if required:
                self.fail(key, "required")
            return None
        if isinstance(val, list):
            out = []
            for i, v in enumerate(val):
                num = self.number(key, f"{key}[{i}]", v, lo=lo, hi=hi, hi_open=hi_open)
                out.append(num if num is not None else lo)
            if not out:
                self.fail(key, "must not be empty")
                return None
            return out
        if isinstance(val, dict):
            missing = {"start", "stop", "step"} - set(val)
            if missing:
                self.fail(key, f"grid object needs start/stop/step, missing {sorted(missing)}")
                return None
            start = self.number(key, f"{key}.start", val["start"], lo=lo, hi=hi, hi_open=hi_open)
            stop = self.number(key, f"{key}.stop", val["stop"], lo=lo, hi=hi, hi_open=hi_open)
            step = self.number(key, f"{key}.step", val["step"], lo=0.0, lo_open=True)
            if None in (start, stop, step):
                return None
            if stop < start:
                self.fail(key, f"stop {stop} < start {start}")
                return None
            values = []
            k = 0
            while True:
                v = start + k * step
                if v > stop + 1e-12:
                    break
                values.append(round(v, 12))
                k += 1
            return values
        self.fail(key, "must be a list or a start/stop/step object")
        return None

    def string_choice(self, key, choices, default=None, required=False):
        val = self._get(key, default)
        if val is None:
            if required:
                self.fail(key, "required")
            return default
        if val not in choices:
            self.fail(key, f"must be one of {sorted(choices)}, got {val!r}")
            return default
        return val

    def string_list_choice(self, key, choices, default=None):
        val = self._get(key, default)
        if val is None:
            return default
        if not isinstance(val, list) or not val:
            self.fail(key, "must be a non-empty list")
            return default
        out = []
        for i, v in enumerate(val):
            if v not in choices:
                self.fail(f"{key}[{i}]", f"must be one of {sorted(choices)}, got {v!r}")
            else:
                out.append(v)
        return out

    def boolean(self, key, default=False):
        val = self._get(key, default)
        if not isinstance(val, bool):
            self.fail(key, f"must be true or false, got {val!r}")
            return default
        return val
