"""
Word, bit and hybrid masking of detected register faults.
"""

from .masking import (
    TECHNIQUES,
    DetectionReport,
    MitigationError,
    bit_masking,
    hybrid,
    mitigate,
    mitigate_raw,
    word_masking,
)
from .agreement import agreement_by_class, sign_msb_agreement

__all__ = [
    "TECHNIQUES",
    "DetectionReport",
    "MitigationError",
    "agreement_by_class",
    "bit_masking",
    "hybrid",
    "mitigate",
    "mitigate_raw",
    "sign_msb_agreement",
    "word_masking",
]
