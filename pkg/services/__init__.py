"""
Services package initialization
"""

from .methods import method_registry, MethodRegistry, GridPlan, resolve_grid_plan

__all__ = [
    "method_registry", "MethodRegistry",
    "GridPlan", "resolve_grid_plan"
]
