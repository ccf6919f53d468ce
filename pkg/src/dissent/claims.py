"""Claim parsing and evidence-region mapping for agent output.

Agents are prompted to emit one claim per line::

    CLAIM: <text> | CONF: <0..1> | EVIDENCE: <text> | REGION: <region-spec>

where ``region-spec`` is ``bbox: x0,y0,x1,y1 @ σ`` or ``desc: <text> @ σ``.
An optional trailing ``| KEY: <topic>`` field names what the claim is about.
A final answer may be given on its own line as ``ANSWER: <answer>``.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Iterable, Sequence

from .model import ClaimTuple, RegionRef, normalize_text

__all__ = [
    "CLAIM_INSTRUCTIONS",
    "MalformedClaim",
    "claim_confidence_to_uncertainty",
    "extract_answer",
    "format_claim",
    "format_region",
    "map_evidence",
    "parse_claims",
    "serialize_claims",
]

logger = logging.getLogger(__name__)

FIELD_SEP = " | "
DEFAULT_CONFIDENCE = 0.5
FALLBACK_MAP_CONFIDENCE = 0.5

CLAIM_INSTRUCTIONS = (
    "Report each key claim on its own line in the form\n"
    "CLAIM: <claim> | CONF: <confidence 0-1> | EVIDENCE: <supporting evidence> | "
    "REGION: bbox: x0,y0,x1,y1 @ <confidence 0-1>  (or REGION: desc: <region description> @ <confidence 0-1>)\n"
    "Finish with a line ANSWER: <your final answer>."
)

_CLAIM_LINE = re.compile(r"^\s*CLAIM:", re.IGNORECASE)
_FIELD = re.compile(r"^\s*(CLAIM|CONF|EVIDENCE|REGION|KEY):\s?(.*)$", re.IGNORECASE | re.DOTALL)
_BBOX = re.compile(r"^\s*bbox:\s*([^@]+?)\s*(?:@\s*(\S+)\s*)?$", re.IGNORECASE)
_DESC = re.compile(r"^\s*desc:\s*(.*?)\s*(?:@\s*([^@\s]+)\s*)?$", re.IGNORECASE | re.DOTALL)
_ANSWER = re.compile(r"^\s*ANSWER:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)
_LABEL = re.compile(r"^\(?([A-Za-z0-9]+)[\).:]?(?:\s|$)")


class MalformedClaim(ValueError):
    """A claim block carries an unusable field."""

    def __init__(self, index: int, message: str):
        super().__init__(f"claim block {index}: {message}")
        self.index = index


def _parse_confidence(raw: str, index: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise MalformedClaim(index, f"CONF {raw!r} is not a number") from None
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise MalformedClaim(index, f"CONF {raw!r} is outside [0, 1]")
    return value


def parse_claims(resp_text: str, image_dims_hint: tuple[float, float] | None = None) -> list[ClaimTuple]:
    """Extract every ``CLAIM:`` line of ``resp_text``, in document order.

    Missing CONF defaults to 0.5; missing REGION leaves the region empty. Text
    outside claim lines is ignored.

    Raises:
        MalformedClaim: a CONF value is not a number in [0, 1], or the claim
            text is empty.
    """
    claims = []
    for index, line in enumerate(l for l in resp_text.splitlines() if _CLAIM_LINE.match(l)):
        fields: dict[str, str] = {}
        for part in line.strip().split(FIELD_SEP):
            m = _FIELD.match(part)
            if m is None:
                # a stray separator inside free text; keep it with the previous field
                if fields:
                    last = next(reversed(fields))
                    fields[last] += FIELD_SEP + part
                continue
            fields[m.group(1).upper()] = m.group(2).strip()
        text = fields.get("CLAIM", "")
        if not text:
            raise MalformedClaim(index, "empty claim text")
        conf = _parse_confidence(fields["CONF"], index) if "CONF" in fields else DEFAULT_CONFIDENCE
        region = map_evidence(fields["REGION"], image_dims_hint) if fields.get("REGION") else None
        claims.append(
            ClaimTuple(
                claim=text,
                confidence=conf,
                evidence=fields.get("EVIDENCE", ""),
                region=region,
                key=fields.get("KEY") or None,
            )
        )
    return claims


def _fallback(region_spec: str, why: str) -> RegionRef:
    logger.warning("unparseable region spec %r (%s); keeping it as a descriptor", region_spec, why)
    return RegionRef(kind="descriptor", descriptor=region_spec.strip(), map_confidence=FALLBACK_MAP_CONFIDENCE)


def map_evidence(region_spec: str, image_dims_hint: tuple[float, float] | None = None) -> RegionRef:
    """Turn a region spec into a :class:`RegionRef`.

    Pixel boxes (any coordinate above 1) are normalized by ``image_dims_hint``
    ``(width, height)``. A missing ``@ σ`` means σ = 0.5. Specs that cannot be
    parsed become a descriptor wrapping the raw text with σ = 0.5.
    """
    if not region_spec or not region_spec.strip():
        raise ValueError("region spec must be non-empty")

    m = _BBOX.match(region_spec)
    if m:
        try:
            coords = [float(v) for v in m.group(1).split(",")]
            sigma = float(m.group(2)) if m.group(2) else FALLBACK_MAP_CONFIDENCE
        except ValueError:
            return _fallback(region_spec, "non-numeric bbox")
        if len(coords) != 4:
            return _fallback(region_spec, "bbox needs four coordinates")
        if any(c > 1.0 for c in coords):
            if image_dims_hint is None:
                return _fallback(region_spec, "pixel bbox without image dimensions")
            w, h = image_dims_hint
            coords = [coords[0] / w, coords[1] / h, coords[2] / w, coords[3] / h]
        try:
            return RegionRef(kind="bbox", bbox=tuple(coords), map_confidence=sigma)
        except ValueError as exc:
            return _fallback(region_spec, str(exc))

    m = _DESC.match(region_spec)
    if m and m.group(1):
        try:
            sigma = float(m.group(2)) if m.group(2) else FALLBACK_MAP_CONFIDENCE
            return RegionRef(kind="descriptor", descriptor=m.group(1), map_confidence=sigma)
        except ValueError as exc:
            return _fallback(region_spec, str(exc))
    return _fallback(region_spec, "unknown region kind")


def format_region(region: RegionRef) -> str:
    if region.kind == "bbox":
        return "bbox: " + ",".join(repr(v) for v in region.bbox) + f" @ {region.map_confidence!r}"
    return f"desc: {region.descriptor} @ {region.map_confidence!r}"


def _check_field(text: str, what: str) -> None:
    if "\n" in text or "\r" in text or FIELD_SEP.strip() in text:
        raise ValueError(f"{what} {text!r} cannot contain newlines or '|'")
    if text != text.strip():
        raise ValueError(f"{what} {text!r} has surrounding whitespace")


def format_claim(claim: ClaimTuple) -> str:
    """Render one claim as a grammar line; parsing it back yields ``claim``."""
    _check_field(claim.claim, "claim")
    _check_field(claim.evidence, "evidence")
    parts = [f"CLAIM: {claim.claim}", f"CONF: {claim.confidence!r}", f"EVIDENCE: {claim.evidence}"]
    if claim.region is not None:
        if claim.region.descriptor is not None:
            _check_field(claim.region.descriptor, "region descriptor")
        parts.append(f"REGION: {format_region(claim.region)}")
    if claim.key is not None:
        _check_field(claim.key, "claim key")
        parts.append(f"KEY: {claim.key}")
    return FIELD_SEP.join(parts)


def serialize_claims(claims: Iterable[ClaimTuple]) -> str:
    return "".join(format_claim(c) + "\n" for c in claims)


def claim_confidence_to_uncertainty(claims: Sequence[ClaimTuple]) -> float:
    """``1 - mean(confidence)``; 0.5 when there are no claims."""
    if not claims:
        return 0.5
    return 1.0 - math.fsum(c.confidence for c in claims) / len(claims)


def extract_answer(text: str, labels: Sequence[str] | None = None) -> str | None:
    """Read the last ``ANSWER:`` line.

    With ``labels`` the answer must resolve to one of them (``"B"``, ``"(B)"``,
    ``"B. red"`` all give ``"B"``); otherwise the normalized answer text is
    returned. ``None`` when nothing usable is found.
    """
    found = _ANSWER.findall(text)
    if not found:
        return None
    raw = found[-1]
    if labels is None:
        return normalize_text(raw) or None
    m = _LABEL.match(raw)
    if m:
        by_upper = {str(label).upper(): str(label) for label in labels}
        return by_upper.get(m.group(1).upper())
    return None
