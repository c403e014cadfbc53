"""Walking-test data model, preprocessing and corpus ingestion."""

from temppnet.sensors.records import SEGMENT_NAMES, PatientRecord, WalkingTest

__all__ = ["SEGMENT_NAMES", "PatientRecord", "WalkingTest"]
