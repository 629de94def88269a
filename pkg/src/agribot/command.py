"""Operator command layer: vocabulary loading, fuzzy n-best matching of
tokenized utterances, and mapping matches to executable action requests.

Similarity is normalized Levenshtein over Unicode code points, so Latin
and Chinese surface forms load and match identically.  Verb and object
tokens may appear in any order within an utterance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_MIN_SCORE = 0.5
VERBS_WITH_TARGET = frozenset({"pick", "place"})


class CommandError(Exception):
    pass


class VocabularyError(CommandError):
    pass


class DuplicateSurfaceForm(VocabularyError):
    pass


class EmptySection(VocabularyError):
    pass


class MalformedVocabularyLine(VocabularyError):
    pass


class NoVerbFound(CommandError):
    pass


class NoMatch(CommandError):
    pass


class TargetAbsent(CommandError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    verbs: dict[str, str]  # surface form -> verb id
    objects: dict[str, str]  # surface form -> class name
    stop_words: frozenset[str]

    def __post_init__(self):
        if not self.verbs:
            raise EmptySection("verbs section is empty")
        if not self.objects:
            raise EmptySection("objects section is empty")
        overlap = set(self.verbs) & set(self.objects)
        if overlap:
            raise DuplicateSurfaceForm(
                f"surface forms mapped as both verb and object: {sorted(overlap)}"
            )


@dataclass(frozen=True)
class Utterance:
    tokens: tuple[str, ...]

    @staticmethod
    def from_text(text: str) -> "Utterance":
        return Utterance(tuple(text.split()))


@dataclass(frozen=True)
class ActionRequest:
    verb: str
    target_class: str | None = None
    drop_zone: str | None = None

    def __post_init__(self):
        needs_target = self.verb in VERBS_WITH_TARGET
        if needs_target and self.target_class is None:
            raise ValueError(f"verb {self.verb!r} requires a target class")
        if not needs_target and self.target_class is not None:
            raise ValueError(f"verb {self.verb!r} takes no target class")


@dataclass(frozen=True)
class CommandMatch:
    action: ActionRequest
    score: float
    verb_surface: str
    object_surface: str | None = None


def levenshtein(a: str, b: str) -> int:
    """Edit distance over Unicode code points, single-row DP."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def similarity(a: str, b: str) -> float:
    """Normalized similarity 1 - lev(a, b) / max(|a|, |b|), in [0, 1]."""
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


def load_vocabulary(text: str) -> Vocabulary:
    """Parse the sectioned vocabulary format: [verbs], [objects], [stop],
    [aliases]; mapping lines "surface = canonical", bare tokens in [stop].
    Aliases resolve through the verb and object tables."""
    verbs: dict[str, str] = {}
    objects: dict[str, str] = {}
    stop: set[str] = set()
    aliases: list[tuple[str, str, int]] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("verbs", "objects", "stop", "aliases"):
                raise MalformedVocabularyLine(f"line {lineno}: unknown section {section!r}")
            continue
        if section is None:
            raise MalformedVocabularyLine(f"line {lineno}: content before any section")
        if section == "stop":
            stop.add(line)
            continue
        if "=" not in line:
            raise MalformedVocabularyLine(f"line {lineno}: expected 'surface = canonical'")
        surface, canonical = (part.strip() for part in line.split("=", 1))
        if not surface or not canonical:
            raise MalformedVocabularyLine(f"line {lineno}: empty surface or canonical form")
        if section == "aliases":
            aliases.append((surface, canonical, lineno))
            continue
        table = verbs if section == "verbs" else objects
        if surface in verbs or surface in objects:
            raise DuplicateSurfaceForm(f"line {lineno}: {surface!r} already defined")
        table[surface] = canonical

    # Aliases point at an existing surface form or directly at a canonical id.
    for surface, target, lineno in aliases:
        if surface in verbs or surface in objects:
            raise DuplicateSurfaceForm(f"line {lineno}: {surface!r} already defined")
        if target in verbs or target in set(verbs.values()):
            verbs[surface] = verbs.get(target, target)
        elif target in objects or target in set(objects.values()):
            objects[surface] = objects.get(target, target)
        else:
            raise MalformedVocabularyLine(
                f"line {lineno}: alias target {target!r} matches no verb or object"
            )
    return Vocabulary(verbs, objects, frozenset(stop))


def _best_token_match(
    tokens: tuple[str, ...], surfaces: dict[str, str]
) -> dict[str, tuple[float, str, str]]:
    """For each canonical id: (best similarity, best token, best surface),
    maximized over its surface forms and all tokens.  Ties prefer the
    lexicographically smaller surface form for determinism."""
    best: dict[str, tuple[float, str, str]] = {}
    for surface in sorted(surfaces):
        canonical = surfaces[surface]
        for token in tokens:
            score = similarity(token, surface)
            entry = best.get(canonical)
            if entry is None or score > entry[0]:
                best[canonical] = (score, token, surface)
    return best


def match_utterance(
    v: Vocabulary, u: Utterance, n: int = 3, min_score: float = DEFAULT_MIN_SCORE
) -> list[CommandMatch]:
    """N-best command candidates for an utterance.

    Stop words are dropped, every remaining token is scored against every
    vocabulary surface form, and a candidate is the best verb paired with
    the best object (for verbs that take one); candidate score is the
    product of its token similarities.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tokens = tuple(t for t in u.tokens if t not in v.stop_words)
    if not tokens:
        raise NoVerbFound("utterance is empty after stop-word removal")

    verb_best = _best_token_match(tokens, v.verbs)
    if max(score for score, _, _ in verb_best.values()) < min_score:
        raise NoVerbFound(f"no verb matched above {min_score}")

    candidates: list[CommandMatch] = []
    for verb_id in sorted(verb_best):
        verb_score, verb_token, verb_surface = verb_best[verb_id]
        if verb_score < min_score:
            continue
        if verb_id in VERBS_WITH_TARGET:
            # Object must come from a different token than the verb.
            remaining = tuple(t for t in tokens if t != verb_token)
            if not remaining:
                continue
            object_best = _best_token_match(remaining, v.objects)
            for class_name in sorted(object_best):
                obj_score, _, obj_surface = object_best[class_name]
                score = verb_score * obj_score
                if score < min_score:
                    continue
                candidates.append(
                    CommandMatch(
                        ActionRequest(verb_id, class_name),
                        score,
                        verb_surface,
                        obj_surface,
                    )
                )
        else:
            candidates.append(
                CommandMatch(ActionRequest(verb_id), verb_score, verb_surface)
            )
    if not candidates:
        raise NoMatch(f"no candidate scored above {min_score}")
    candidates.sort(key=lambda m: (-m.score, m.verb_surface, m.object_surface or ""))
    return candidates[:n]


def map_to_action(m: CommandMatch, scene_classes: set[str]) -> ActionRequest:
    """Validate a match against the live scene: picking requires the
    target class to be present."""
    action = m.action
    if action.verb == "pick" and action.target_class not in scene_classes:
        raise TargetAbsent(f"no {action.target_class!r} in the scene")
    return action


DEFAULT_VOCABULARY_TEXT = """\
[verbs]
pick = pick
place = place
home = home
stop = stop

[objects]
apple = apple
banana = banana
orange = orange
seed = seed

[stop]
the
a
an
please

[aliases]
grab = pick
put = place
"""


def default_vocabulary() -> Vocabulary:
    return load_vocabulary(DEFAULT_VOCABULARY_TEXT)
