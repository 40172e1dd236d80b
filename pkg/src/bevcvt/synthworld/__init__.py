from .town import LanePolyline, TownMap, TownSpec, generate_town, town_from_json, town_to_json
from .routing import EgoPose, NoRouteError, Route, ego_poses_along_route, plan_route
from .rig import RigSpec, compose_with_ego, default_rig
from .render import (
    LABEL_LANE,
    LABEL_OFFROAD,
    LABEL_ROAD,
    LABEL_SKY,
    PALETTE,
    classify_ground_points,
    points_on_lane,
    points_on_road,
    render_camera_labels,
    render_camera_view,
)
from .grids import (
    BEVGrid,
    GridSpec,
    cell_centers_world,
    rasterize_bev_gt,
    rasterize_sparse_trajectory,
)

__all__ = [
    "BEVGrid",
    "EgoPose",
    "GridSpec",
    "LABEL_LANE",
    "LABEL_OFFROAD",
    "LABEL_ROAD",
    "LABEL_SKY",
    "LanePolyline",
    "NoRouteError",
    "PALETTE",
    "RigSpec",
    "Route",
    "TownMap",
    "TownSpec",
    "cell_centers_world",
    "classify_ground_points",
    "compose_with_ego",
    "default_rig",
    "ego_poses_along_route",
    "generate_town",
    "plan_route",
    "points_on_lane",
    "points_on_road",
    "rasterize_bev_gt",
    "rasterize_sparse_trajectory",
    "render_camera_labels",
    "render_camera_view",
    "town_from_json",
    "town_to_json",
]
