"""Beam-to-beam contact: penalty laws, point, endpoint and line forces."""

from .penalty import PenaltyLaw, penalty_force
from .point import PairBlocks, contact_blocks, point_contact
from .endpoint import (
    boundary_minimum,
    endpoint_contact,
    endpoint_to_endpoint,
    endpoint_to_line,
    line_to_endpoint,
)
from .intervals import Boundary, Interval, SegmentationPoint, build_intervals
from .line import (
    SLAVE,
    GaussPointState,
    LineContactBlocks,
    line_contact,
    segmentation_points,
)
from .search import candidate_pairs, element_aabb, element_hull_points
from .manager import (
    ContactConfig,
    ContactEvaluation,
    ContactManager,
    EndpointRecord,
    GaussRecord,
)

__all__ = [
    "PenaltyLaw",
    "penalty_force",
    "PairBlocks",
    "contact_blocks",
    "point_contact",
    "boundary_minimum",
    "endpoint_contact",
    "endpoint_to_endpoint",
    "endpoint_to_line",
    "line_to_endpoint",
    "Boundary",
    "Interval",
    "SegmentationPoint",
    "build_intervals",
    "SLAVE",
    "GaussPointState",
    "LineContactBlocks",
    "line_contact",
    "segmentation_points",
    "candidate_pairs",
    "element_aabb",
    "element_hull_points",
    "ContactConfig",
    "ContactEvaluation",
    "ContactManager",
    "EndpointRecord",
    "GaussRecord",
]
