"""Byte-level accelerators for the two hottest requests.

Batched scene sync must cost per-state time that is small next to the fixed
round-trip cost, which rules out generic JSON handling of every entry on the
hot path. This module recognizes canonically encoded ``get_model_states`` /
``set_model_states`` lines and serves them from raw bytes:

  get:  request names are split from the line (memoized per span); each
        model's state is spliced in as its cached canonical fragment,
        re-encoded lazily only after the record actually changed.
  set:  an entry whose bytes equal the currently stored fragment is an
        idempotent write: the store already proved those bytes valid, so the
        entry is OK with no further inspection (zero-copy compares). Changed
        entries must match a strict grammar (canonical key order, plain
        bounded decimals, names without escapes); matching entries are
        validated from the captured tokens and their exact bytes become the
        stored fragment.

Anything else falls back to the generic decode path, semantics preserved
(the fallback is the authoritative implementation; equivalence is
property-tested).
"""

from __future__ import annotations

import re

from .world import World, _TEXT, _text_of

__all__ = ["classify", "fast_get_model_states", "fast_set_model_states",
           "fast_get_model_state", "fast_set_model_state"]

_PREFIX = re.compile(rb'\{"id":(\d{1,19}),"op":"(get|set)_model_states","body":\{"(names|states)":\[')
_SUFFIX = b"]}}\n"
_GET_ONE = re.compile(rb'\{"id":(\d{1,19}),"op":"get_model_state","body":\{"name":"([A-Za-z0-9_.\-/:]+)"\}\}\n')
_SET_ONE_PREFIX = re.compile(rb'\{"id":(\d{1,19}),"op":"set_model_state","body":\{"state":')

# Strict entry grammar: canonical key order, no whitespace, no escapes in
# strings, plain bounded decimals (no exponents, so every token is finite).
_NAME = rb'[A-Za-z0-9_.\-/:]+'
_NUM = rb'-?(?:0|[1-9]\d{0,14})(?:\.\d{1,17})?'
_ENTRY = (
    rb'\{"name":"' + _NAME + rb'","pose":\{"position":\{"x":N,"y":N,"z":N\},'
    rb'"orientation":\{"x":N,"y":N,"z":N,"w":N\}\},'
    rb'"twist":\{"linear":\{"x":N,"y":N,"z":N\},"angular":\{"x":N,"y":N,"z":N\}\},'
    rb'"reference_frame":"' + _NAME + rb'"\}'
).replace(b"N", _NUM)
_SPAN = re.compile(_ENTRY + rb"(?:," + _ENTRY + rb")*")
_ENTRY_RE = re.compile(_ENTRY)

_OK = b'"OK"'
_NOT_FOUND = b'"NOT_FOUND"'
_INVALID = b'"INVALID"'
_ORIENT_KEY = b'"orientation":{"x":'
_ORIENT_SKIP = len(_ORIENT_KEY)
_NAMES_CACHE_LIMIT = 128
_MEMO_LIMIT = 32


def classify(line: bytes) -> tuple[str, bytes, bytes] | None:
    """Return (op, id_digits, payload_span) for a canonical hot-op line."""
    m = _PREFIX.match(line)
    if m is not None:
        if not line.endswith(_SUFFIX):
            return None
        op = m.group(2)
        # The alternation admits mixed forms like get+states; reject them.
        if (op == b"get") != (m.group(3) == b"names"):
            return None
        return ("get" if op == b"get" else "set", m.group(1), line[m.end():-4])
    m = _GET_ONE.fullmatch(line)
    if m is not None:
        return ("get_one", m.group(1), m.group(2))
    m = _SET_ONE_PREFIX.match(line)
    if m is not None and line.endswith(b"}}\n"):
        return ("set_one", m.group(1), line[m.end():-3])
    return None


def fast_get_model_states(world: World, span: bytes) -> bytes | None:
    """Response body bytes, or None when the span needs the generic path.

    A byte-identical request replays its memoized response as long as the
    world version is unchanged (no mutation of any kind since it was built).
    """
    with world.lock:
        memo = world._get_memo.get(span)
        if memo is not None and memo[0] == world._version:
            return memo[1]
        if span:
            names = world._names_cache.get(span)
            if names is None:
                if not (span.startswith(b'"') and span.endswith(b'"')):
                    return None
                names = span[1:-1].split(b'","')
                for name in names:
                    if b'"' in name or b"\\" in name:
                        return None
                if len(world._names_cache) >= _NAMES_CACHE_LIMIT:
                    world._names_cache.clear()
                world._names_cache[span] = names
        else:
            names = ()
        index = world._models_b
        frags = []
        append = frags.append
        for name in names:
            rec = index.get(name)
            append(_text_of(rec) if rec is not None else b"null")
        body = b'{"results":[' + b",".join(frags) + b"]}"
        if len(world._get_memo) >= _MEMO_LIMIT:
            world._get_memo.clear()
        world._get_memo[span] = (world._version, body)
    return body


def fast_set_model_states(world: World, span: bytes) -> bytes | None:
    """Response body bytes, or None when the span needs the generic path.

    Memoization is sound for sets too: a replay at the same world version
    writes exactly the values the earlier application left in place (an
    idempotent no-op), and the statuses depend only on membership (frozen
    while the version holds) and entry-intrinsic validity.
    """
    if not span:
        return b'{"statuses":[]}'
    with world.lock:
        memo = world._set_memo.get(span)
        if memo is not None and memo[0] == world._version:
            return memo[1]
        parts = span.split(b"},{")
        last = len(parts) - 1
        statuses = _idempotent_pass(world._models_b, parts, last)
        if statuses is None:
            statuses = _validated_pass(world, span, parts, last)
            if statuses is None:
                return None
        body = b'{"statuses":[' + b",".join(statuses) + b"]}"
        if len(world._set_memo) >= _MEMO_LIMIT:
            world._set_memo.clear()
        world._set_memo[span] = (world._version, body)
    return body


def fast_get_model_state(world: World, name: bytes) -> bytes | None:
    """Body bytes for the legacy single get; missing models use the generic
    path so the error response stays byte-identical."""
    with world.lock:
        rec = world._models_b.get(name)
        if rec is None:
            return None
        return b'{"state":' + _text_of(rec) + b"}"


def fast_set_model_state(world: World, span: bytes) -> bytes | None:
    """Body bytes for the legacy single set; only the clean OK path is served
    here (NOT_FOUND/INVALID/odd encodings fall back to the generic handler)."""
    with world.lock:
        models = world._models_b
        if span.startswith(b'{"name":"'):
            end = span.find(b'"', 9)
            if end > 9:
                rec = models.get(span[9:end])
                if rec is not None and rec[_TEXT] == span:
                    return b'{"status":"OK"}'
        if _ENTRY_RE.fullmatch(span) is None:
            return None
        name = span[9:span.index(b'"', 9)]
        if name not in models:
            return None
        k = span.index(_ORIENT_KEY) + _ORIENT_SKIP
        e = span.index(b"}", k)
        t = span[k:e].split(b",")
        qx = float(t[0])
        qy = float(t[1][4:])
        qz = float(t[2][4:])
        qw = float(t[3][4:])
        if abs(qx * qx + qy * qy + qz * qz + qw * qw - 1.0) > 2e-9:
            return None
        world.store_model_text(name.decode("utf-8"), span)
        return b'{"status":"OK"}'


def _idempotent_pass(index: dict, parts: list[bytes], last: int) -> list[bytes] | None:
    """All-OK statuses when every entry's bytes equal its stored fragment.

    Joining the matched fragments with commas reproduces the span exactly, so
    a full match proves the span is a well-formed list of already-valid
    entries regardless of how the crude '},{' split interacted with string
    contents.
    """
    for i, part in enumerate(parts):
        if i == 0:
            if not part.startswith(b'{"name":"'):
                return None
            off = 9
        else:
            if not part.startswith(b'"name":"'):
                return None
            off = 8
        end = part.find(b'"', off)
        if end < 0:
            return None
        rec = index.get(part[off:end])
        if rec is None:
            return None
        stored = rec[_TEXT]
        if stored is None:
            return None
        np = len(part)
        if i == 0:
            if i == last:
                if stored != part:
                    return None
            elif len(stored) != np + 1 or not stored.startswith(part):
                return None
        elif i == last:
            if len(stored) != np + 1 or not stored.endswith(part):
                return None
        elif len(stored) != np + 2 or stored.find(part, 1, 1 + np) != 1:
            return None
    return [_OK] * (last + 1)


def _validated_pass(world: World, span: bytes, parts: list[bytes], last: int) -> list[bytes] | None:
    if _SPAN.fullmatch(span) is None:
        return None
    statuses: list[bytes] = []
    pending: dict[bytes, bytes] = {}
    index = world._models_b
    for i, part in enumerate(parts):
        frag = part
        if i != 0:
            frag = b"{" + frag
        if i != last:
            frag = frag + b"}"
        name = frag[9:frag.index(b'"', 9)]
        k = frag.index(_ORIENT_KEY) + _ORIENT_SKIP
        e = frag.index(b"}", k)
        t = frag[k:e].split(b",")
        qx = float(t[0])
        qy = float(t[1][4:])
        qz = float(t[2][4:])
        qw = float(t[3][4:])
        n2 = qx * qx + qy * qy + qz * qz + qw * qw
        if abs(n2 - 1.0) > 2e-9:
            statuses.append(_INVALID)
            continue
        if name not in index:
            statuses.append(_NOT_FOUND)
            continue
        pending[name] = frag
        statuses.append(_OK)
    for name, frag in pending.items():
        world.store_model_text(name.decode("utf-8"), frag)
    return statuses
