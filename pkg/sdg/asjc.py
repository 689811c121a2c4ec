"""
All Science Journal Classification (ASJC) top-level subject areas.

A 4-digit ASJC code belongs to the area named by its first two digits
(2700 -> 27, Medicine). The table below covers every top-level area.
"""

from __future__ import annotations

ASJC_AREAS: dict[int, str] = {
    10: "Multidisciplinary",
    11: "Agricultural and Biological Sciences",
    12: "Arts and Humanities",
    13: "Biochemistry, Genetics and Molecular Biology",
    14: "Business, Management and Accounting",
    15: "Chemical Engineering",
    16: "Chemistry",
    17: "Computer Science",
    18: "Decision Sciences",
    19: "Earth and Planetary Sciences",
    20: "Economics, Econometrics and Finance",
    21: "Energy",
    22: "Engineering",
    23: "Environmental Science",
    24: "Immunology and Microbiology",
    25: "Materials Science",
    26: "Mathematics",
    27: "Medicine",
    28: "Neuroscience",
    29: "Nursing",
    30: "Pharmacology, Toxicology and Pharmaceutics",
    31: "Physics and Astronomy",
    32: "Psychology",
    33: "Social Sciences",
    34: "Veterinary",
    35: "Dentistry",
    36: "Health Professions",
}


def area_of(code: int) -> int:
    """Return the 2-digit top-level area of a 4-digit code."""
    return code // 100


def area_name(code: int) -> str | None:
    """Top-level area name for a 4-digit code or 2-digit prefix."""
    return ASJC_AREAS.get(code if code < 100 else area_of(code))


def code_matches(record_code: int, filter_code: int) -> bool:
    """
    Check a record's subject code against a filter code.

    Filter codes below 100 are 2-digit prefixes and match every 4-digit
    code in that area; 4-digit filter codes match exactly.
    """
    if filter_code < 100:
        return area_of(record_code) == filter_code
    return record_code == filter_code
