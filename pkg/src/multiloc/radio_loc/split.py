"""Odd/even trajectory split: odd-numbered runs train, even-numbered runs test."""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from typing import Iterable

from ..errors import ConfigurationError, DegenerateInputError

_TRAILING_INT = re.compile(r"(\d+)\D*$")


def trajectory_number(tid) -> int:
    """Integer index of a trajectory id such as ``7`` or ``"Grid110"``."""
    if isinstance(tid, bool):
        raise DegenerateInputError(f"trajectory id {tid!r} has no integer index")
    if isinstance(tid, int):
        return tid
    m = _TRAILING_INT.search(str(tid))
    if m is None:
        raise DegenerateInputError(f"trajectory id {tid!r} has no integer index")
    return int(m.group(1))


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    test: tuple

    def __post_init__(self):
        if set(self.train) & set(self.test):
            raise ConfigurationError("train and test sets overlap")


def build_split(ids: Iterable) -> DatasetSplit:
    """Odd indices train, even indices test; input order is kept within each side."""
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise DegenerateInputError("duplicate trajectory ids")
    nums = [trajectory_number(i) for i in ids]
    if len(set(nums)) != len(nums):
        raise DegenerateInputError("trajectory ids share an integer index")
    train = tuple(i for i, n in zip(ids, nums) if n % 2 == 1)
    test = tuple(i for i, n in zip(ids, nums) if n % 2 == 0)
    if not train:
        raise ConfigurationError("split has no odd-numbered (training) trajectories")
    if not test:
        warnings.warn("split has no even-numbered (test) trajectories", stacklevel=2)
    return DatasetSplit(train, test)
