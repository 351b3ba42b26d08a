"""Great-circle geometry and the spatial index behind all neighbor queries.

Distances are haversine kilometers on a sphere. For indexed queries the
points are embedded on the sphere in 3-d, where the Euclidean chord length
is a monotone function of arc length; a KD-tree on the embedding therefore
answers exact haversine radius and k-nearest-neighbor queries.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

EARTH_RADIUS_KM = 6371.0


def haversine_km(lon1, lat1, lon2, lat2, radius_km: float = EARTH_RADIUS_KM):
    """Great-circle distance; accepts scalars or broadcastable arrays."""
    lon1, lat1 = np.radians(lon1), np.radians(lat1)
    lon2, lat2 = np.radians(lon2), np.radians(lat2)
    a = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    out = 2.0 * radius_km * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def sphere_embed(lon, lat, radius_km: float = EARTH_RADIUS_KM) -> np.ndarray:
    """(n, 3) Cartesian points on the sphere surface."""
    lon, lat = np.radians(np.asarray(lon, float)), np.radians(np.asarray(lat, float))
    return np.column_stack([
        radius_km * np.cos(lat) * np.cos(lon),
        radius_km * np.cos(lat) * np.sin(lon),
        radius_km * np.sin(lat),
    ])


def arc_to_chord(arc_km, radius_km: float = EARTH_RADIUS_KM):
    return 2.0 * radius_km * np.sin(np.asarray(arc_km) / (2.0 * radius_km))


def chord_to_arc(chord_km, radius_km: float = EARTH_RADIUS_KM):
    ratio = np.clip(np.asarray(chord_km) / (2.0 * radius_km), -1.0, 1.0)
    return 2.0 * radius_km * np.arcsin(ratio)


class SphereIndex:
    """KD-tree over sphere-embedded points; all distances in arc kilometers."""

    def __init__(self, lon, lat, radius_km: float = EARTH_RADIUS_KM):
        self.radius_km = radius_km
        self.n = len(np.asarray(lon))
        self._xyz = sphere_embed(lon, lat, radius_km)
        self._tree = cKDTree(self._xyz)

    def knn_km(self, k: int) -> np.ndarray:
        """(n, k) arc distances to each point's k nearest other points."""
        # k+1 because the closest hit is always the point itself.
        chord, _ = self._tree.query(self._xyz, k=k + 1, workers=-1)
        return chord_to_arc(chord[:, 1:], self.radius_km)

    def counts_within(self, eps_km: float) -> np.ndarray:
        """Neighborhood sizes within eps, the point itself included."""
        r = float(arc_to_chord(eps_km, self.radius_km))
        return self._tree.query_ball_point(self._xyz, r, return_length=True, workers=-1)

    def neighbors_of(self, i: int, eps_km: float) -> np.ndarray:
        """Indices within eps of point i (self included), ascending."""
        r = float(arc_to_chord(eps_km, self.radius_km))
        hits = self._tree.query_ball_point(self._xyz[i], r)
        return np.sort(np.asarray(hits, dtype=np.int64))
