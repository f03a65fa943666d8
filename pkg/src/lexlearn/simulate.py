"""Lexical-decision trial simulation, static and dynamic.

A simulation replays one participant's trials in order. Each trial's form is
turned into a cue row (unknown cues are skipped and counted), semantics are
predicted with the given engine, and a per-trial measure is recorded: for
words the correlation with the word's own semantic vector, for nonwords the
correlation with the nearest semantic neighbour in the lexicon. Measures are
always computed with the pre-update state; in dynamic mode one learning step
follows each word trial (delta rule for linear engines, one backpropagation
step for deep engines).

Trials file: tab-separated ``participant<TAB>order<TAB>form<TAB>is_word<TAB>rt_ms``.
Trace export: one row per trial with columns participant, order, form,
is_word, rt_ms, correlation, rt_inv, unknown_cues.
"""

from dataclasses import dataclass, field

import numpy as np

from . import deep_map, linear_map
from .exceptions import FileFormatError, InputError
from .lexicon import encode_units, entry_from_form
from .linalg import as_matrix, pearson, pearson_rows

TRACE_COLUMNS = ("participant", "order", "form", "is_word", "rt_ms",
                 "correlation", "rt_inv", "unknown_cues")


@dataclass(frozen=True)
class Trial:
    participant: str
    order: int
    form: str
    is_word: bool
    rt_ms: float

    def __post_init__(self):
        if self.rt_ms <= 0:
            raise InputError(
                f"trial {self.participant}/{self.order}: rt_ms must be > 0")


@dataclass(frozen=True)
class TrialRecord:
    participant: str
    order: int
    form: str
    is_word: bool
    rt_ms: float
    correlation: float
    rt_inv: float
    unknown_cues: int


@dataclass
class SimulationTrace:
    participant: str
    mode: str  # static|dynamic
    engine: str  # linear|deep
    records: list = field(default_factory=list)


def rt_inverse(rt_ms):
    """Reaction-time transform -1000 / RT (RT in ms, result in -1/s)."""
    if rt_ms <= 0:
        raise InputError(f"rt_ms must be > 0, got {rt_ms}")
    return -1000.0 / rt_ms


def load_trials(path):
    """Read a trials file; is_word is 1/0."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise FileFormatError("empty trials file", line=1)
    if lines[0].split("\t") != ["participant", "order", "form", "is_word",
                                "rt_ms"]:
        raise FileFormatError(
            "header must be participant/order/form/is_word/rt_ms", line=1)
    trials = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise FileFormatError(
                f"expected 5 tab-separated fields, got {len(fields)}",
                line=lineno)
        try:
            trials.append(Trial(participant=fields[0], order=int(fields[1]),
                                form=fields[2], is_word=fields[3] == "1",
                                rt_ms=float(fields[4])))
        except (ValueError, InputError) as exc:
            raise FileFormatError(str(exc), line=lineno)
    return trials


def group_by_participant(trials):
    """Split trials into per-participant lists, insertion-ordered, checking
    that order is strictly increasing within each participant."""
    groups = {}
    for trial in trials:
        group = groups.setdefault(trial.participant, [])
        if group and trial.order <= group[-1].order:
            raise InputError(
                f"participant {trial.participant}: trial order must be "
                f"strictly increasing ({group[-1].order} then {trial.order})")
        group.append(trial)
    return groups


def engine_kind(engine):
    if isinstance(engine, linear_map.LinearMapping):
        return "linear"
    if isinstance(engine, deep_map.DeepNetwork):
        return "deep"
    raise InputError(f"unsupported engine type {type(engine).__name__}")


def clone_engine(engine):
    """Independent state copy, so participants can be simulated in parallel."""
    if engine_kind(engine) == "linear":
        return linear_map.LinearMapping(weights=engine.weights.copy(),
                                        direction=engine.direction,
                                        provenance=engine.provenance)
    net = deep_map.DeepNetwork(engine.input_dim, engine.layer_specs,
                               task=engine.task, seed=engine.seed)
    net.set_parameters(*engine.copy_parameters())
    return net


def _predict_row(engine, row):
    if engine_kind(engine) == "linear":
        return linear_map.predict(engine, row[None, :])[0]
    return deep_map.forward(engine, row[None, :])[0]


def _trial_row(trial, entries_by_form, inventory):
    """Cue row and (for words) the lexicon entry for one trial form."""
    entry = entries_by_form.get(trial.form)
    if trial.is_word:
        if entry is None:
            raise InputError(
                f"word trial form '{trial.form}' is not in the lexicon")
        units = entry.units
    else:
        # Nonwords are not in the lexicon; segment per character.
        units = entry.units if entry is not None else \
            entry_from_form(trial.form).units
    row, unknown = encode_units(units, inventory, unknown="skip")
    return row, unknown, entry


def _run(trials, engine, entries, inventory, semantic_matrix, mode,
         rate=0.0, update_nonwords=False):
    trials = list(trials)
    participants = {t.participant for t in trials}
    if len(participants) > 1:
        raise InputError(
            "one simulation handles one participant; got "
            f"{sorted(participants)}")
    for previous, current in zip(trials, trials[1:]):
        if current.order <= previous.order:
            raise InputError("trial order must be strictly increasing")
    s = as_matrix(semantic_matrix, "semantic matrix")
    entries_by_form = {}
    for entry in entries:
        entries_by_form.setdefault(entry.form, entry)

    trace = SimulationTrace(
        participant=trials[0].participant if trials else "",
        mode=mode, engine=engine_kind(engine))
    for trial in trials:
        row, unknown, entry = _trial_row(trial, entries_by_form, inventory)
        prediction = _predict_row(engine, row)
        if trial.is_word:
            target = s[entry.sem_index]
            correlation = pearson(prediction, target)
        else:
            target = None
            correlation = float(pearson_rows(prediction[None, :], s).max())
        trace.records.append(TrialRecord(
            participant=trial.participant, order=trial.order, form=trial.form,
            is_word=trial.is_word, rt_ms=trial.rt_ms,
            correlation=correlation, rt_inv=rt_inverse(trial.rt_ms),
            unknown_cues=unknown))
        if mode == "dynamic":
            if target is None:
                if not update_nonwords:
                    continue
                target = np.zeros(s.shape[1])
            if trace.engine == "linear":
                linear_map.widrow_hoff_step(engine, row, target, eta=rate)
            else:
                deep_map.online_step(engine, row, target, learning_rate=rate)
    return trace


def run_static(trials, engine, entries, inventory, semantic_matrix):
    """Replay trials without any learning; the engine is left untouched."""
    return _run(trials, engine, entries, inventory, semantic_matrix, "static")


def run_dynamic(trials, engine, entries, inventory, semantic_matrix, rate,
                update_nonwords=False):
    """Replay trials, learning from each word trial after its measure is
    recorded. The engine is updated in place; clone it first if the initial
    state is still needed. Nonword trials update toward the zero vector only
    when ``update_nonwords`` is set."""
    if rate < 0:
        raise InputError(f"rate must be >= 0, got {rate}")
    return _run(trials, engine, entries, inventory, semantic_matrix,
                "dynamic", rate=rate, update_nonwords=update_nonwords)


def extract_avg_rt_table(entries, models, form_matrix, semantic_matrix, rts):
    """Per-word target correlation under each model plus RTinv.

    ``models`` is an ordered mapping name -> engine; ``rts`` is one RT in ms
    per entry, with None/NaN marking words without an RT (skipped). Returns
    (header, rows) ready for tab-separated export.
    """
    c = as_matrix(form_matrix, "form matrix")
    s = as_matrix(semantic_matrix, "semantic matrix")
    if len(rts) != len(entries):
        raise InputError(f"{len(rts)} RTs vs {len(entries)} entries")
    names = list(models)
    predictions = {}
    for name in names:
        engine = models[name]
        if engine_kind(engine) == "linear":
            predictions[name] = linear_map.predict(engine, c)
        else:
            predictions[name] = deep_map.forward(engine, c)
    header = ["form"] + names + ["rt_inv"]
    rows = []
    for i, entry in enumerate(entries):
        rt = rts[i]
        if rt is None or (isinstance(rt, float) and np.isnan(rt)):
            continue
        row = [entry.form]
        for name in names:
            row.append(pearson(predictions[name][i], s[entry.sem_index]))
        row.append(rt_inverse(float(rt)))
        rows.append(row)
    return header, rows


def write_table(path, header, rows):
    """Generic tab-separated table writer (floats at 12 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(header) + "\n")
        for row in rows:
            rendered = [format(v, ".12g") if isinstance(v, float) else str(v)
                        for v in row]
            handle.write("\t".join(rendered) + "\n")


def write_trace(path, trace):
    """Trace export with the documented fixed column set."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\t".join(TRACE_COLUMNS) + "\n")
        for r in trace.records:
            handle.write(
                f"{r.participant}\t{r.order}\t{r.form}\t{int(r.is_word)}"
                f"\t{format(r.rt_ms, '.12g')}\t{format(r.correlation, '.12g')}"
                f"\t{format(r.rt_inv, '.12g')}\t{r.unknown_cues}\n")


def read_trace(path):
    """Read a trace file back into a list of per-trial dicts."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or tuple(lines[0].split("\t")) != TRACE_COLUMNS:
        raise FileFormatError("not a trace file (bad header)", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(TRACE_COLUMNS):
            raise FileFormatError(
                f"expected {len(TRACE_COLUMNS)} fields, got {len(fields)}",
                line=lineno)
        rows.append({
            "participant": fields[0], "order": int(fields[1]),
            "form": fields[2], "is_word": fields[3] == "1",
            "rt_ms": float(fields[4]), "correlation": float(fields[5]),
            "rt_inv": float(fields[6]), "unknown_cues": int(fields[7])})
    return rows
