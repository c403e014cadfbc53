"""Annualized US economic benefit of a depression screen, in billions of dollars.

benefit = 139.95 * recall (upper bound on untreated-depression cost recovered)
cost    = 304 * 0.2 * (1 - precision) (treatment resources spent on false positives)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from temppnet.errors import DataValidationError

UNTREATED_BASE = 139.95
TREATMENT_BASE = 304.0
FP_SHARE = 0.2


@dataclass(frozen=True, slots=True)
class EconRow:
    benefit_tp: float
    cost_fp: float
    net: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True, slots=True)
class ReferenceEconRow:
    model: str
    precision: float
    recall: float
    benefit: float
    cost: float
    net: float


# Published rows; "No intervention" reports zeros by fiat rather than by the formulas.
REFERENCE_ECON_ROWS: tuple[ReferenceEconRow, ...] = (
    ReferenceEconRow("TempPNet", 0.737, 0.796, 111.400, 15.990, 95.410),
    ReferenceEconRow("ProtoPNet", 0.554, 0.761, 106.502, 27.117, 79.385),
    ReferenceEconRow("ProSeNet", 0.555, 0.814, 113.919, 27.056, 86.863),
    ReferenceEconRow("CNN", 0.534, 0.861, 120.497, 28.333, 92.164),
    ReferenceEconRow("RNN", 0.544, 0.870, 121.757, 27.725, 94.032),
    ReferenceEconRow("KNN", 0.567, 0.469, 65.637, 26.326, 39.310),
    ReferenceEconRow("SVM", 0.577, 0.741, 103.703, 25.718, 77.985),
    ReferenceEconRow("Random forest", 0.600, 0.630, 88.169, 24.320, 63.849),
    ReferenceEconRow("AdaBoost", 0.557, 0.543, 75.993, 26.934, 49.058),
    ReferenceEconRow("XGBoost", 0.616, 0.556, 77.812, 23.347, 54.465),
    ReferenceEconRow("No intervention", 0.0, 0.0, 0.0, 0.0, 0.0),
)
NO_INTERVENTION = "No intervention"


def econ_analysis(precision: float, recall: float) -> EconRow:
    for name, value in (("precision", precision), ("recall", recall)):
        if not 0.0 <= value <= 1.0:
            raise DataValidationError(f"{name} must lie in [0, 1], got {value}")
    benefit = UNTREATED_BASE * recall
    cost = TREATMENT_BASE * FP_SHARE * (1.0 - precision)
    return EconRow(benefit_tp=benefit, cost_fp=cost, net=benefit - cost)


def reproduce_reference_table() -> list[tuple[ReferenceEconRow, EconRow]]:
    """Recompute every published row from its precision and recall.

    The formulas are applied literally, so "No intervention" comes out at
    (0, 60.8, -60.8) instead of the published zeros.
    """

    return [(row, econ_analysis(row.precision, row.recall)) for row in REFERENCE_ECON_ROWS]
