from __future__ import annotations

import enum


class PatternLabel(enum.IntEnum):
    """Level-1 fingerprint pattern. Arches are deliberately not modelled."""

    LEFT_LOOP = 1
    RIGHT_LOOP = 2
    WHORL = 3

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "PatternLabel":
        if isinstance(value, PatternLabel):
            return value
        if isinstance(value, str):
            text = value.strip().lower()
            if text.isdigit():
                return cls(int(text))
            for member in cls:
                if member.slug == text:
                    return member
            raise ValueError(f"unknown pattern label {value!r}")
        return cls(int(value))


PATTERNS = tuple(PatternLabel)
