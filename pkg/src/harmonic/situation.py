"""The agent's situation model: a monotone store of situation-scoped frames."""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable

from .frames import (
    ConceptRef,
    CoRef,
    Filler,
    FrameDocument,
    FrameInstance,
    InstanceRef,
    NumericRange,
    Number,
    Provenance,
    Text,
)

# Dialogue participants: the human teammate and the robot. They exist in every
# situation model and may be referenced from any meaning representation.
HUMAN = "HUMAN.1"
ROBOT = "LEIA.1"
PARTICIPANTS = (HUMAN, ROBOT)


class GroundingError(ValueError):
    """A CoRef or reference in an input has no situation target."""


class SituationModel:
    def __init__(self, frames: Iterable[FrameInstance] = ()):
        self._frames: dict[str, FrameInstance] = {}
        self._index: dict[str, list[str]] = {}
        self.tick = 0
        self.focus: str | None = None
        for fr in frames:
            self._put(fr)

    @classmethod
    def initial(cls, requester_location: str = "daniel-location") -> "SituationModel":
        return cls(
            [
                FrameInstance("HUMAN", 1, (("location", Text(requester_location)),), Provenance.SITUATION, 0),
                FrameInstance("LEIA", 1, (), Provenance.SITUATION, 0),
                FrameInstance("ENGINE", 1, (("located-in", ConceptRef("ENGINE-ROOM")),), Provenance.SITUATION, 0),
            ]
        )

    def _put(self, fr: FrameInstance) -> None:
        if fr.id not in self._frames:
            self._index.setdefault(fr.concept, []).append(fr.id)
        self._frames[fr.id] = fr

    # -- reads ------------------------------------------------------------

    def __contains__(self, fid: str) -> bool:
        return fid in self._frames

    def __len__(self) -> int:
        return len(self._frames)

    def get(self, fid: str) -> FrameInstance | None:
        return self._frames.get(fid)

    def __getitem__(self, fid: str) -> FrameInstance:
        return self._frames[fid]

    def instances_of(self, concept: str) -> list[FrameInstance]:
        return [self._frames[i] for i in self._index.get(concept, [])]

    def frames(self) -> list[FrameInstance]:
        return list(self._frames.values())

    def resolve(self, filler: Filler) -> FrameInstance | None:
        if isinstance(filler, (InstanceRef, CoRef)):
            return self._frames.get(filler.id)
        return None

    def snapshot(self) -> FrameDocument:
        return FrameDocument(tuple(self._frames.values()))

    # -- writes -----------------------------------------------------------

    def add(
        self, concept: str, slots: Iterable[tuple[str, Filler]] = (), provenance=Provenance.SITUATION, tick=None
    ) -> FrameInstance:
        index = len(self._index.get(concept, [])) + 1
        fr = FrameInstance(concept, index, tuple(slots), provenance, self.tick if tick is None else tick)
        self._put(fr)
        return fr

    def refine(self, fid: str, name: str, value: Filler, tick: int | None = None) -> FrameInstance:
        fr = self._frames[fid].with_slot(name, value)
        fr = replace(fr, tick=self.tick if tick is None else tick)
        self._put(fr)
        return fr

    def integrate(self, doc: FrameDocument, provenance: Provenance, tick: int | None = None) -> dict[str, str]:
        """Merge a meaning representation; returns document id -> situation id.

        Frames carrying ``corefer`` refine their target; other frames become
        new situation instances. InstanceRefs are rewritten to situation ids.
        """
        mapping: dict[str, str] = {}
        for fr in doc.frames:
            target = fr.get("corefer")
            if isinstance(target, CoRef):
                if target.id not in self._frames:
                    raise GroundingError(f"->{target.id} has no situation instance")
                mapping[fr.id] = target.id
        for fr in doc.frames:
            if fr.id not in mapping:
                index = len(self._index.get(fr.concept, [])) + 1
                mapping[fr.id] = f"{fr.concept}.{index}"
                self._put(FrameInstance(fr.concept, index, (), provenance, self.tick if tick is None else tick))
        for fr in doc.frames:
            sid = mapping[fr.id]
            for name, value in fr.slots:
                if name == "corefer":
                    continue
                if isinstance(value, InstanceRef):
                    if value.id in mapping:
                        c, n = mapping[value.id].rsplit(".", 1)
                        value = InstanceRef(c, int(n))
                    elif value.id not in self._frames:
                        raise GroundingError(f"#{value.id} has no target")
                self.refine(sid, name, value, tick)
        return mapping

    # -- description matching -----------------------------------------------

    def compatible(self, fr: FrameInstance, description: Iterable[tuple[str, Filler]]) -> bool:
        """True if ``fr`` does not contradict any described slot value."""
        for name, wanted in description:
            have = fr.get(name)
            if have is None:
                continue
            if not fillers_compatible(have, wanted):
                return False
        return True


def fillers_compatible(have: Filler, wanted: Filler) -> bool:
    if isinstance(wanted, NumericRange):
        if isinstance(have, Number):
            return wanted.admits(have.value)
        if isinstance(have, NumericRange):
            return have.lo <= wanted.hi and wanted.lo <= have.hi
    return have == wanted
