"""Formal concept analysis primitives.

Contexts store their incidence as Python ints used as bitsets: one row mask per
object (over attribute indices) and one column mask per attribute (over object
indices). Concepts are enumerated with NextClosure, which yields them
in lectic order of intents with respect to the context's attribute order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping


@dataclass(frozen=True)
class FormalConcept:
    extent: frozenset
    intent: frozenset

    def __repr__(self) -> str:
        return f"({sorted(self.extent)}, {sorted(self.intent)})"


@dataclass(frozen=True)
class FormalContext:
    """Binary relation between objects and attributes.

    Build instances with :meth:`from_rows`; the constructor expects the masks to
    be consistent with each other.
    """

    objects: tuple
    attributes: tuple
    rows: tuple  # rows[i]: bitmask over attribute indices for objects[i]
    cols: tuple  # cols[j]: bitmask over object indices for attributes[j]
    _obj_index: dict = field(repr=False, compare=False, default_factory=dict)
    _attr_index: dict = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_rows(
        cls,
        rows: Mapping[Hashable, Iterable[Hashable]],
        attributes: Iterable[Hashable] | None = None,
    ) -> "FormalContext":
        """Create a context from ``{object: attributes}``.

        Object order follows the mapping. Attribute order is ``attributes`` if
        given, otherwise first-seen order across the rows.
        """
        objects = tuple(rows)
        if len(set(objects)) != len(objects):
            raise ValueError("duplicate object identifiers")
        if attributes is None:
            seen: dict = {}
            for obj in objects:
                for a in rows[obj]:
                    seen.setdefault(a, None)
            attrs = tuple(seen)
        else:
            attrs = tuple(attributes)
            if len(set(attrs)) != len(attrs):
                raise ValueError("duplicate attribute identifiers")
        attr_index = {a: j for j, a in enumerate(attrs)}
        obj_index = {o: i for i, o in enumerate(objects)}
        row_masks = []
        col_masks = [0] * len(attrs)
        for i, obj in enumerate(objects):
            mask = 0
            for a in rows[obj]:
                try:
                    j = attr_index[a]
                except KeyError:
                    raise ValueError(f"object {obj!r} references undeclared attribute {a!r}") from None
                mask |= 1 << j
                col_masks[j] |= 1 << i
            row_masks.append(mask)
        return cls(objects, attrs, tuple(row_masks), tuple(col_masks), obj_index, attr_index)

    @property
    def all_objects_mask(self) -> int:
        return (1 << len(self.objects)) - 1

    @property
    def all_attributes_mask(self) -> int:
        return (1 << len(self.attributes)) - 1

    def object_mask(self, objs: Iterable[Hashable]) -> int:
        mask = 0
        for o in objs:
            try:
                mask |= 1 << self._obj_index[o]
            except KeyError:
                raise ValueError(f"unknown object {o!r}") from None
        return mask

    def attribute_mask(self, attrs: Iterable[Hashable]) -> int:
        mask = 0
        for a in attrs:
            try:
                mask |= 1 << self._attr_index[a]
            except KeyError:
                raise ValueError(f"unknown attribute {a!r}") from None
        return mask

    def objects_of(self, mask: int) -> frozenset:
        return frozenset(self.objects[i] for i in _bits(mask))

    def attributes_of(self, mask: int) -> frozenset:
        return frozenset(self.attributes[j] for j in _bits(mask))

    def intent_mask(self, obj_mask: int) -> int:
        out = self.all_attributes_mask
        rows = self.rows
        while obj_mask and out:
            low = obj_mask & -obj_mask
            out &= rows[low.bit_length() - 1]
            obj_mask ^= low
        return out

    def extent_mask(self, attr_mask: int) -> int:
        out = self.all_objects_mask
        cols = self.cols
        while attr_mask and out:
            low = attr_mask & -attr_mask
            out &= cols[low.bit_length() - 1]
            attr_mask ^= low
        return out

    def incidences(self) -> Iterator[tuple]:
        for i, obj in enumerate(self.objects):
            for j in _bits(self.rows[i]):
                yield obj, self.attributes[j]


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def derive_intent(context: FormalContext, objs: Iterable[Hashable]) -> frozenset:
    """Attributes shared by every object in ``objs`` (all attributes for no objects)."""
    return context.attributes_of(context.intent_mask(context.object_mask(objs)))


def derive_extent(context: FormalContext, attrs: Iterable[Hashable]) -> frozenset:
    """Objects having every attribute in ``attrs`` (all objects for no attributes)."""
    return context.objects_of(context.extent_mask(context.attribute_mask(attrs)))


def next_closure(context: FormalContext, stats: Counter | None = None) -> Iterator[FormalConcept]:
    """Yield every concept of ``context`` in lectic order of intents.

    Attribute index 0 is the most significant position. When ``stats`` is
    given, ``stats["closures"]`` is incremented once per closure computed,
    which serves as a hardware-independent work measure.
    """
    m = len(context.attributes)

    def close(attr_mask: int) -> tuple[int, int]:
        if stats is not None:
            stats["closures"] += 1
        ext = context.extent_mask(attr_mask)
        return ext, context.intent_mask(ext)

    ext, intent = close(0)
    yield FormalConcept(context.objects_of(ext), context.attributes_of(intent))
    while True:
        for i in range(m - 1, -1, -1):
            bit = 1 << i
            if intent & bit:
                intent &= ~bit
                continue
            new_ext, new_intent = close(intent | bit)
            # canonicity test: the closure must not add any attribute before i
            if (new_intent & ~intent) & (bit - 1) == 0:
                ext, intent = new_ext, new_intent
                break
        else:
            return
        yield FormalConcept(context.objects_of(ext), context.attributes_of(intent))


def enumerate_concepts(context: FormalContext, stats: Counter | None = None) -> list[FormalConcept]:
    return list(next_closure(context, stats))
