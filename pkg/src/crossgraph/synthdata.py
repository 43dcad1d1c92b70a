"""Deterministic generator for a synthetic cross-modal multiple-choice task.

Each scene is a G x G feature grid holding a few objects. An object occupies
one cell carrying its shape and row/column one-hots; its color one-hot sits
in the neighboring context cell to the right (wrapping), tagged with a
half-strength copy of the shape one-hot. Object boxes cover only the object
cell, so color can only be recovered by aggregating context across cells.

Questions ask for one attribute (color / shape / row / column) of a subject
object referenced by shape or color. Candidate answers are short token
statements; distractor slots are constructed so that rejecting each one
needs a different capability:

  * value swap      - same subject and relation, wrong value: only the scene
                      can reject it;
  * subject swap    - a true statement about another object: only the
                      question identifies it as off-topic;
  * relation swap   - a true statement about the right object under a
                      different relation: only the question's asked relation
                      rejects it.

Every answer instance is followed by a rationale instance for the same
scene: its question is the question plus the gold answer, and its candidates
locate the subject object on the grid (row and column).

Instances serialize as line-delimited JSON with a `#meta ` sidecar header;
identical configs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

GENERATOR_VERSION = "1"

TASK_ANSWER = "answer"
TASK_RATIONALE = "rationale"

DISTRACTOR_STRATEGIES = ("attribute-swap", "lexical-overlap", "random")

# Fixed head of the vocabulary; attribute/filler tokens follow.
ASK_COLOR, ASK_SHAPE, ASK_ROW, ASK_COL = 0, 1, 2, 3
HAS_COLOR, HAS_SHAPE, AT_ROW, AT_COL = 4, 5, 6, 7
_HEAD = 8

ASK_TO_RELATION = {ASK_COLOR: HAS_COLOR, ASK_SHAPE: HAS_SHAPE,
                   ASK_ROW: AT_ROW, ASK_COL: AT_COL}


class GenerationError(ValueError):
    """Config cannot produce valid instances."""


class DatasetFormatError(ValueError):
    """A dataset file violates the line-JSON schema; message carries the line."""


@dataclass
class GeneratorConfig:
    grid_size: int = 4            # G; the grid has P = G*G cells
    num_colors: int = 6
    num_shapes: int = 6
    num_fillers: int = 6
    objects_min: int = 2
    objects_max: int = 4
    question_len_min: int = 2     # core question is 2 tokens; rest is filler
    question_len_max: int = 4
    answer_len_min: int = 3       # answer core is 3 tokens, rationale core 5
    answer_len_max: int = 6
    num_scenes: int = 100         # instances = 2 * num_scenes (answer+rationale)
    split_fraction: float = 0.8   # share of scenes in the train split
    distractor_strategy: str = "attribute-swap"
    noise_sigma: float = 0.02
    seed: int = 0

    @property
    def positions(self) -> int:
        return self.grid_size * self.grid_size

    @property
    def channels(self) -> int:
        return self.num_colors + self.num_shapes + 2 * self.grid_size

    @property
    def vocab_size(self) -> int:
        return (_HEAD + self.num_colors + self.num_shapes
                + 2 * self.grid_size + self.num_fillers)

    # token-range helpers
    def color_token(self, c: int) -> int:
        return _HEAD + c

    def shape_token(self, s: int) -> int:
        return _HEAD + self.num_colors + s

    def row_token(self, r: int) -> int:
        return _HEAD + self.num_colors + self.num_shapes + r

    def col_token(self, c: int) -> int:
        return _HEAD + self.num_colors + self.num_shapes + self.grid_size + c

    def filler_token(self, f: int) -> int:
        return _HEAD + self.num_colors + self.num_shapes + 2 * self.grid_size + f

    def validate(self) -> None:
        if self.grid_size < 2:
            raise GenerationError("grid_size must be at least 2")
        if not (0 < self.split_fraction < 1):
            raise GenerationError("split_fraction must lie in (0, 1)")
        if self.objects_min < 1 or self.objects_max < self.objects_min:
            raise GenerationError("objects range is empty")
        if 2 * self.objects_max > self.positions:
            raise GenerationError(
                f"{self.objects_max} objects plus context cells do not fit a "
                f"{self.grid_size}x{self.grid_size} grid")
        if self.objects_max > min(self.num_colors, self.num_shapes):
            raise GenerationError("need at least as many colors/shapes as objects")
        if self.question_len_min < 2 or self.question_len_max < self.question_len_min:
            raise GenerationError("question length range is empty or below core size")
        if self.answer_len_min < 3 or self.answer_len_max < 5:
            raise GenerationError(
                "answer length range must cover the 3-token answer core and "
                "the 5-token rationale core")
        if self.num_fillers < 1:
            raise GenerationError("need at least one filler token")
        if self.distractor_strategy not in DISTRACTOR_STRATEGIES:
            raise GenerationError(
                f"unknown distractor strategy {self.distractor_strategy!r}")
        if self.grid_size < 4 and self.distractor_strategy == "lexical-overlap":
            # three distinct wrong coordinates are needed for some slots
            raise GenerationError("lexical-overlap needs grid_size >= 4")


@dataclass
class Instance:
    """One multiple-choice problem."""

    scene: np.ndarray               # P x C float64 grid features
    boxes: list[list[int]]          # cell indices per object
    question: list[int]
    candidates: list[list[int]]     # exactly 4 token sequences
    gold: int
    task: str                       # "answer" | "rationale"

    def __eq__(self, other) -> bool:
        return (isinstance(other, Instance)
                and np.array_equal(self.scene, other.scene)
                and self.boxes == other.boxes
                and self.question == other.question
                and self.candidates == other.candidates
                and self.gold == other.gold
                and self.task == other.task)


@dataclass
class Dataset:
    instances: list[Instance]
    meta: dict = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Dataset) and self.meta == other.meta
                and self.instances == other.instances)


@dataclass(frozen=True)
class SceneObject:
    cell: int
    color: int
    shape: int


# ----------------------------------------------------------------- scenes

def context_cell(cell: int, grid_size: int) -> int:
    """The cell holding an object's color: its right neighbor, wrapping."""
    row, col = divmod(cell, grid_size)
    return row * grid_size + (col + 1) % grid_size


def _place_objects(cfg: GeneratorConfig, rng, n: int) -> list[int]:
    # Object cells and their context cells must all be distinct.
    for _ in range(1000):
        cells = rng.choice(cfg.positions, size=n, replace=False)
        occupied = set(int(c) for c in cells)
        halos = {context_cell(int(c), cfg.grid_size) for c in cells}
        if len(occupied | halos) == 2 * n:
            return [int(c) for c in cells]
    raise GenerationError("could not place objects with free context cells")


def _render_scene(cfg: GeneratorConfig, rng, objects: list[SceneObject]) -> np.ndarray:
    g = cfg.grid_size
    grid = rng.normal(0.0, cfg.noise_sigma, size=(cfg.positions, cfg.channels))
    for obj in objects:
        row, col = divmod(obj.cell, g)
        grid[obj.cell, cfg.num_colors + obj.shape] += 1.0
        grid[obj.cell, cfg.num_colors + cfg.num_shapes + row] += 1.0
        grid[obj.cell, cfg.num_colors + cfg.num_shapes + g + col] += 1.0
        halo = context_cell(obj.cell, g)
        grid[halo, obj.color] += 1.0
        grid[halo, cfg.num_colors + obj.shape] += 0.5
    return np.round(grid, 6)


# ---------------------------------------------------------------- tokens

def _subject_token(cfg: GeneratorConfig, obj: SceneObject, by: str) -> int:
    return cfg.shape_token(obj.shape) if by == "shape" else cfg.color_token(obj.color)


def _fact(cfg: GeneratorConfig, obj: SceneObject, by: str, relation: int,
          value: int | None = None) -> list[int]:
    """[subject, relation, value]; value defaults to the object's truth."""
    g = cfg.grid_size
    row, col = divmod(obj.cell, g)
    if value is None:
        value = {HAS_COLOR: cfg.color_token(obj.color),
                 HAS_SHAPE: cfg.shape_token(obj.shape),
                 AT_ROW: cfg.row_token(row),
                 AT_COL: cfg.col_token(col)}[relation]
    return [_subject_token(cfg, obj, by), relation, value]


def _location(cfg: GeneratorConfig, obj: SceneObject, by: str,
              row: int | None = None, col: int | None = None) -> list[int]:
    true_row, true_col = divmod(obj.cell, cfg.grid_size)
    row = true_row if row is None else row
    col = true_col if col is None else col
    return [_subject_token(cfg, obj, by), AT_ROW, cfg.row_token(row),
            AT_COL, cfg.col_token(col)]


def _pad(cfg: GeneratorConfig, tokens: list[int], target_len: int, rng) -> list[int]:
    fillers = [cfg.filler_token(int(f))
               for f in rng.integers(0, cfg.num_fillers,
                                     size=max(0, target_len - len(tokens)))]
    return tokens + fillers


def _wrong_value(rng, true: int, domain: int, preferred: list[int]) -> int:
    """A value != true, preferring ones realized elsewhere in the scene."""
    options = [v for v in preferred if v != true]
    if options:
        return int(options[rng.integers(0, len(options))])
    others = [v for v in range(domain) if v != true]
    return int(others[rng.integers(0, len(others))])


# ------------------------------------------------------------ generation

_RELATIONS_FOR_SUBJECT = {"shape": (HAS_COLOR, AT_ROW, AT_COL),
                          "color": (HAS_SHAPE, AT_ROW, AT_COL)}


def _answer_candidates(cfg: GeneratorConfig, rng, objects: list[SceneObject],
                       subj: SceneObject, by: str, ask: int) -> tuple[list[int], list[list[int]]]:
    relation = ASK_TO_RELATION[ask]
    gold = _fact(cfg, subj, by, relation)
    g = cfg.grid_size
    row, col = divmod(subj.cell, g)
    others = [o for o in objects if o is not subj]

    def value_swap(uniform: bool = False) -> list[int]:
        # Plausible swaps prefer values realized on other objects; the
        # multi-sample strategies need the whole wrong-value domain instead.
        if relation == HAS_COLOR:
            v = _wrong_value(rng, subj.color, cfg.num_colors,
                             [] if uniform else [o.color for o in others])
            return _fact(cfg, subj, by, relation, cfg.color_token(v))
        if relation == HAS_SHAPE:
            v = _wrong_value(rng, subj.shape, cfg.num_shapes,
                             [] if uniform else [o.shape for o in others])
            return _fact(cfg, subj, by, relation, cfg.shape_token(v))
        if relation == AT_ROW:
            v = _wrong_value(rng, row, g,
                             [] if uniform else [o.cell // g for o in others])
            return _fact(cfg, subj, by, relation, cfg.row_token(v))
        v = _wrong_value(rng, col, g,
                         [] if uniform else [o.cell % g for o in others])
        return _fact(cfg, subj, by, relation, cfg.col_token(v))

    def subject_swap() -> list[int]:
        if others:
            other = others[rng.integers(0, len(others))]
            return _fact(cfg, other, by, relation)
        # single-object scene: claim about an absent subject
        if by == "shape":
            absent = _wrong_value(rng, subj.shape, cfg.num_shapes, [])
            fake = SceneObject(cell=subj.cell, color=subj.color, shape=absent)
        else:
            absent = _wrong_value(rng, subj.color, cfg.num_colors, [])
            fake = SceneObject(cell=subj.cell, color=absent, shape=subj.shape)
        return _fact(cfg, fake, by, relation)

    def relation_swap() -> list[int]:
        pool = [r for r in _RELATIONS_FOR_SUBJECT[by] if r != relation]
        return _fact(cfg, subj, by, int(pool[rng.integers(0, len(pool))]))

    strategy = cfg.distractor_strategy
    if strategy == "attribute-swap":
        distractors = [value_swap(), subject_swap(), relation_swap()]
    elif strategy == "lexical-overlap":
        distractors = []
        while len(distractors) < 3:
            cand = value_swap(uniform=True)
            if cand != gold and cand not in distractors:
                distractors.append(cand)
    else:  # random: resample on any collision, never emit a gold duplicate
        distractors = []
        while len(distractors) < 3:
            o = objects[rng.integers(0, len(objects))]
            b = "shape" if rng.integers(0, 2) == 0 else "color"
            rel = int(_RELATIONS_FOR_SUBJECT[b][rng.integers(0, 3)])
            domain, mk = {HAS_COLOR: (cfg.num_colors, cfg.color_token),
                          HAS_SHAPE: (cfg.num_shapes, cfg.shape_token),
                          AT_ROW: (g, cfg.row_token),
                          AT_COL: (g, cfg.col_token)}[rel]
            cand = _fact(cfg, o, b, rel, mk(int(rng.integers(0, domain))))
            if cand != gold and cand not in distractors:
                distractors.append(cand)
    return gold, distractors


def _rationale_candidates(cfg: GeneratorConfig, rng, objects: list[SceneObject],
                          subj: SceneObject, by: str, ask: int) -> tuple[list[int], list[list[int]]]:
    g = cfg.grid_size
    row, col = divmod(subj.cell, g)
    others = [o for o in objects if o is not subj]
    gold = _location(cfg, subj, by)

    def row_swap(uniform: bool = False) -> list[int]:
        pool = [] if uniform else [o.cell // g for o in others]
        return _location(cfg, subj, by, row=_wrong_value(rng, row, g, pool))

    def col_swap(uniform: bool = False) -> list[int]:
        pool = [] if uniform else [o.cell % g for o in others]
        return _location(cfg, subj, by, col=_wrong_value(rng, col, g, pool))

    def subject_swap() -> list[int]:
        if others:
            return _location(cfg, others[rng.integers(0, len(others))], by)
        wrong_r = _wrong_value(rng, row, g, [])
        return _location(cfg, subj, by, row=wrong_r,
                         col=_wrong_value(rng, col, g, []))

    def distinct_coord_swaps(make, n):
        out = []
        while len(out) < n:
            cand = make(uniform=True)
            if cand != gold and cand not in out:
                out.append(cand)
        return out

    strategy = cfg.distractor_strategy
    if strategy == "lexical-overlap":
        # keep any coordinate the question already reveals fixed
        if ask == ASK_ROW:
            distractors = distinct_coord_swaps(col_swap, 3)
        elif ask == ASK_COL:
            distractors = distinct_coord_swaps(row_swap, 3)
        else:
            distractors = (distinct_coord_swaps(row_swap, 1)
                           + distinct_coord_swaps(col_swap, 2))
    elif strategy == "attribute-swap":
        if ask == ASK_ROW:      # the answer already names the row
            distractors = distinct_coord_swaps(col_swap, 2) + [subject_swap()]
        elif ask == ASK_COL:
            distractors = distinct_coord_swaps(row_swap, 2) + [subject_swap()]
        else:
            distractors = [row_swap(), col_swap(), subject_swap()]
    else:  # random locations, resampled away from gold and duplicates
        distractors = []
        while len(distractors) < 3:
            o = objects[rng.integers(0, len(objects))]
            cand = _location(cfg, o, by, row=int(rng.integers(0, g)),
                             col=int(rng.integers(0, g)))
            if cand != gold and cand not in distractors:
                distractors.append(cand)
    return gold, distractors


def _assemble(cfg: GeneratorConfig, rng, scene: np.ndarray,
              boxes: list[list[int]], question: list[int], gold: list[int],
              distractors: list[list[int]], task: str) -> Instance:
    lens = rng.integers(max(cfg.answer_len_min, len(gold)),
                        cfg.answer_len_max + 1, size=4)
    cands = [_pad(cfg, list(c), int(n), rng)
             for c, n in zip([gold] + distractors, lens)]
    order = rng.permutation(4)
    shuffled = [cands[int(k)] for k in order]
    gold_pos = int(np.where(order == 0)[0][0])
    return Instance(scene=scene, boxes=boxes, question=question,
                    candidates=shuffled, gold=gold_pos, task=task)


def generate(config: GeneratorConfig) -> Dataset:
    """Produce `2 * num_scenes` instances (answer/rationale pairs, adjacent).

    Every instance is checked against the symbolic solver before being
    emitted; a mismatch raises GenerationError.
    """
    config.validate()
    rng = np.random.default_rng(np.random.PCG64(config.seed))
    instances: list[Instance] = []
    for _ in range(config.num_scenes):
        n = int(rng.integers(config.objects_min, config.objects_max + 1))
        cells = _place_objects(config, rng, n)
        colors = rng.choice(config.num_colors, size=n, replace=False)
        shapes = rng.choice(config.num_shapes, size=n, replace=False)
        objects = [SceneObject(cell=cells[i], color=int(colors[i]),
                               shape=int(shapes[i])) for i in range(n)]
        scene = _render_scene(config, rng, objects)
        boxes = [[o.cell] for o in objects]

        ask = int(rng.integers(0, 4))
        by = "color" if ask == ASK_SHAPE else "shape"
        subj = objects[int(rng.integers(0, n))]

        q_len = int(rng.integers(config.question_len_min, config.question_len_max + 1))
        question = _pad(config, [ask, _subject_token(config, subj, by)], q_len, rng)

        gold_a, dis_a = _answer_candidates(config, rng, objects, subj, by, ask)
        answer_inst = _assemble(config, rng, scene, boxes, question, gold_a,
                                dis_a, TASK_ANSWER)

        r_question = list(question) + list(answer_inst.candidates[answer_inst.gold])
        gold_r, dis_r = _rationale_candidates(config, rng, objects, subj, by, ask)
        rationale_inst = _assemble(config, rng, scene, boxes, r_question,
                                   gold_r, dis_r, TASK_RATIONALE)

        for inst in (answer_inst, rationale_inst):
            if symbolic_solve(inst, config) != inst.gold:
                raise GenerationError("generated instance fails its own solver")
        instances.append(answer_inst)
        instances.append(rationale_inst)

    meta = {"config": asdict(config), "generator_version": GENERATOR_VERSION,
            "seed": config.seed}
    return Dataset(instances=instances, meta=meta)


def split_dataset(dataset: Dataset, fraction: float) -> tuple[Dataset, Dataset]:
    """Split by scene pair so answer/rationale partners stay together."""
    pairs = len(dataset.instances) // 2
    cut = 2 * int(round(fraction * pairs))
    return (Dataset(dataset.instances[:cut], dict(dataset.meta)),
            Dataset(dataset.instances[cut:], dict(dataset.meta)))


# ------------------------------------------------------------- the solver

def decode_objects(instance: Instance, cfg: GeneratorConfig) -> list[SceneObject]:
    """Reconstruct the latent objects from the raw grid and boxes."""
    out = []
    for box in instance.boxes:
        cell = box[0]
        halo = context_cell(cell, cfg.grid_size)
        shape = int(np.argmax(
            instance.scene[cell, cfg.num_colors:cfg.num_colors + cfg.num_shapes]))
        color = int(np.argmax(instance.scene[halo, :cfg.num_colors]))
        out.append(SceneObject(cell=cell, color=color, shape=shape))
    return out


def _token_kind(cfg: GeneratorConfig, token: int) -> tuple[str, int]:
    if token < _HEAD:
        return ("ask" if token < 4 else "relation", token)
    t = token - _HEAD
    if t < cfg.num_colors:
        return ("color", t)
    t -= cfg.num_colors
    if t < cfg.num_shapes:
        return ("shape", t)
    t -= cfg.num_shapes
    if t < cfg.grid_size:
        return ("row", t)
    t -= cfg.grid_size
    if t < cfg.grid_size:
        return ("col", t)
    return ("filler", t - cfg.grid_size)


def _parse_statement(cfg: GeneratorConfig, tokens: list[int]) -> dict:
    """Pull subject / relation / values out of a token statement."""
    out: dict = {"relations": {}}
    i = 0
    while i < len(tokens):
        kind, idx = _token_kind(cfg, tokens[i])
        if kind in ("color", "shape") and "subject" not in out:
            out["subject"] = (kind, idx)
        elif kind == "relation" and i + 1 < len(tokens):
            vkind, vidx = _token_kind(cfg, tokens[i + 1])
            out["relations"][tokens[i]] = (vkind, vidx)
            i += 1
        i += 1
    return out


def symbolic_solve(instance: Instance, cfg: GeneratorConfig) -> int:
    """Answer by reading the latent scene; raises if no unique candidate fits."""
    objects = decode_objects(instance, cfg)
    g = cfg.grid_size

    qkind, qidx = None, None
    ask = None
    for token in instance.question:
        kind, idx = _token_kind(cfg, token)
        if kind == "ask" and ask is None:
            ask = idx
        elif kind in ("color", "shape") and qkind is None:
            qkind, qidx = kind, idx
    subj = next((o for o in objects
                 if (o.color if qkind == "color" else o.shape) == qidx), None)
    if subj is None or ask is None:
        raise GenerationError("question does not reference a scene object")
    row, col = divmod(subj.cell, g)
    truth = {HAS_COLOR: ("color", subj.color), HAS_SHAPE: ("shape", subj.shape),
             AT_ROW: ("row", row), AT_COL: ("col", col)}

    matches = []
    for k, cand in enumerate(instance.candidates):
        parsed = _parse_statement(cfg, cand)
        if parsed.get("subject") != (qkind, qidx):
            continue
        rels = parsed["relations"]
        if instance.task == TASK_ANSWER:
            want = ASK_TO_RELATION[ask]
            if set(rels) == {want} and rels[want] == truth[want]:
                matches.append(k)
        else:
            if (set(rels) == {AT_ROW, AT_COL}
                    and rels[AT_ROW] == ("row", row)
                    and rels[AT_COL] == ("col", col)):
                matches.append(k)
    if len(matches) != 1:
        raise GenerationError(
            f"expected exactly one consistent candidate, found {matches}")
    return matches[0]


def lexical_overlap_pick(instance: Instance) -> int:
    """No-vision baseline: the candidate sharing the most question tokens
    (counted with candidate multiplicity), lowest index on ties."""
    qset = set(instance.question)
    overlaps = [sum(1 for tok in cand if tok in qset)
                for cand in instance.candidates]
    return int(np.argmax(overlaps))


# ------------------------------------------------------------------- I/O

_SCHEMA_FIELDS = {"scene", "boxes", "question", "candidates", "gold", "task"}


def save(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#meta " + json.dumps(dataset.meta, sort_keys=True,
                                       separators=(",", ":")) + "\n")
        for inst in dataset.instances:
            rec = {"scene": inst.scene.tolist(), "boxes": inst.boxes,
                   "question": inst.question, "candidates": inst.candidates,
                   "gold": inst.gold, "task": inst.task}
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")


def _schema_error(lineno: int, msg: str) -> DatasetFormatError:
    return DatasetFormatError(f"line {lineno}: {msg}")


def load(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#meta "):
        raise _schema_error(1, "missing '#meta ' header line")
    try:
        meta = json.loads(lines[0][len("#meta "):])
    except json.JSONDecodeError as exc:
        raise _schema_error(1, f"bad meta JSON: {exc}") from exc

    instances = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _schema_error(lineno, f"bad JSON: {exc}") from exc
        if not isinstance(rec, dict) or set(rec) != _SCHEMA_FIELDS:
            raise _schema_error(
                lineno, f"fields must be exactly {sorted(_SCHEMA_FIELDS)}")
        scene = np.asarray(rec["scene"], dtype=np.float64)
        if scene.ndim != 2:
            raise _schema_error(lineno, "scene must be a P x C array")
        cands = rec["candidates"]
        if (not isinstance(cands, list) or len(cands) != 4
                or any(not isinstance(c, list) or not c for c in cands)):
            raise _schema_error(lineno, "candidates must be 4 non-empty lists")
        if not isinstance(rec["gold"], int) or not 0 <= rec["gold"] < 4:
            raise _schema_error(lineno, "gold must be an index in 0..3")
        if rec["task"] not in (TASK_ANSWER, TASK_RATIONALE):
            raise _schema_error(lineno, f"unknown task {rec['task']!r}")
        if not isinstance(rec["boxes"], list) or not rec["boxes"]:
            raise _schema_error(lineno, "boxes must be a non-empty list")
        if not isinstance(rec["question"], list) or not rec["question"]:
            raise _schema_error(lineno, "question must be a non-empty token list")
        instances.append(Instance(
            scene=scene, boxes=rec["boxes"], question=rec["question"],
            candidates=cands, gold=rec["gold"], task=rec["task"]))
    return Dataset(instances=instances, meta=meta)


def config_from_meta(meta: dict) -> GeneratorConfig:
    return GeneratorConfig(**meta["config"])


def answer_rationale_pairs(instances: list[Instance]) -> list[tuple[int, int]]:
    """Indices of (answer, rationale) partners: a rationale instance directly
    following an answer instance for the same scene."""
    pairs = []
    for i in range(len(instances) - 1):
        a, b = instances[i], instances[i + 1]
        if (a.task == TASK_ANSWER and b.task == TASK_RATIONALE
                and np.array_equal(a.scene, b.scene)):
            pairs.append((i, i + 1))
    return pairs
