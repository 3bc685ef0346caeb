"""Daily-series container and calendar arithmetic.

Two calendars appear in practice: synthetic ensembles use a no-leap 365-day
year, while observational records carry real Gregorian leap days.  A
DailySeries records which one it uses; downstream code asks this module for
month/day-of-year labels instead of doing its own date math.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distributions import DomainError

MONTH_LENGTHS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)

# month number (1..12) for each day of a year, both calendar variants
_MONTH_OF_DAY_365 = np.repeat(np.arange(1, 13, dtype=np.int8), MONTH_LENGTHS)
_MONTH_OF_DAY_366 = np.repeat(
    np.arange(1, 13, dtype=np.int8),
    [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31],
)
FEB29_INDEX = 59  # 0-based position of Feb 29 within a leap year


def is_leap_year(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def year_length(year: int, with_leap_days: bool) -> int:
    return 366 if with_leap_days and is_leap_year(year) else 365


@dataclass
class DailySeries:
    """One grid cell's daily record.

    values are in chronological order starting on Jan 1 of start_year and
    covering exactly n_years whole calendar years.
    """

    cell_id: str
    values: np.ndarray
    start_year: int
    with_leap_days: bool
    n_years: int
    variable: str = "precip"
    units: str = "mm/day"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.validate()

    def validate(self) -> "DailySeries":
        if self.n_years < 1:
            raise DomainError(f"n_years must be >= 1, got {self.n_years}")
        expected = sum(
            year_length(self.start_year + i, self.with_leap_days)
            for i in range(self.n_years)
        )
        if self.values.size != expected:
            raise DomainError(
                f"cell {self.cell_id!r}: {self.values.size} values but calendar "
                f"({self.start_year}, {self.n_years} years, leap={self.with_leap_days}) "
                f"implies {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError(f"cell {self.cell_id!r}: values must be finite")
        if "precip" in self.variable.lower() and np.any(self.values < 0):
            raise DomainError(f"cell {self.cell_id!r}: negative precipitation values")
        return self

    @classmethod
    def from_values(cls, cell_id: str, values, start_year: int,
                    with_leap_days: bool, variable: str = "precip",
                    units: str = "mm/day") -> "DailySeries":
        """Build a series from raw values, inferring n_years from the calendar.

        Raises naming the offending year if the values do not cover whole years.
        """
        v = np.asarray(values, dtype=float)
        n_years = 0
        total = 0
        while total < v.size:
            yl = year_length(start_year + n_years, with_leap_days)
            if total + yl > v.size:
                raise DomainError(
                    f"cell {cell_id!r}: year {start_year + n_years} is incomplete "
                    f"({v.size - total} of {yl} days)"
                )
            total += yl
            n_years += 1
        if n_years == 0:
            raise DomainError(f"cell {cell_id!r}: empty series")
        return cls(cell_id, v, start_year, with_leap_days, n_years, variable, units)

    def year_slices(self) -> list[tuple[int, slice]]:
        """(year, slice into values) for each calendar year, in order."""
        out = []
        start = 0
        for i in range(self.n_years):
            year = self.start_year + i
            n = year_length(year, self.with_leap_days)
            out.append((year, slice(start, start + n)))
            start += n
        return out

    def month_of_day(self) -> np.ndarray:
        """Month number 1..12 for every value."""
        parts = []
        for year, _ in self.year_slices():
            if year_length(year, self.with_leap_days) == 366:
                parts.append(_MONTH_OF_DAY_366)
            else:
                parts.append(_MONTH_OF_DAY_365)
        return np.concatenate(parts)

    def leap_day_mask(self) -> np.ndarray:
        """True exactly on Feb 29 entries."""
        mask = np.zeros(self.values.size, dtype=bool)
        for year, sl in self.year_slices():
            if year_length(year, self.with_leap_days) == 366:
                mask[sl.start + FEB29_INDEX] = True
        return mask
