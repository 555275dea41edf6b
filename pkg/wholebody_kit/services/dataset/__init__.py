"""
Dataset Tools
- Summary statistics of annotation files
- Skeleton rendering to SVG
"""

from .stats import (
    dataset_stats,
    labeled_rates,
    area_summary,
    stats,
)

from .render import (
    Marker,
    Segment,
    RenderPlan,
    plan_render,
    draw_plan,
    render_set,
    render,
)

__all__ = [
    # Statistics
    "dataset_stats",
    "labeled_rates",
    "area_summary",
    "stats",
    # Rendering
    "Marker",
    "Segment",
    "RenderPlan",
    "plan_render",
    "draw_plan",
    "render_set",
    "render",
]
