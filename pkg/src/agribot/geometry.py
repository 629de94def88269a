"""Pinhole camera model and frame transforms.

Conventions (right-handed everywhere):

  World frame:  z up, workbench plane at z = 0.
  Camera frame: x right, y down, z forward along the optical axis
                (standard computer-vision convention).
  Image frame:  u right, v down, origin top-left, units pixels.

``CameraExtrinsics`` stores the WORLD -> CAMERA rigid transform:
``Xc = R @ Xw + t``.  The camera->world direction is the analytic
inverse ``Xw = R.T @ (Xc - t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(Exception):
    pass


class NonPositiveDepth(GeometryError):
    pass


class RayParallelToPlane(GeometryError):
    pass


class PlaneBehindCamera(GeometryError):
    pass


class DegenerateConfiguration(GeometryError):
    pass


class SingularHomography(GeometryError):
    pass


_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class CameraExtrinsics:
    """World->camera rigid transform: Xc = R @ Xw + t."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        t = np.asarray(self.t, dtype=float).reshape(3)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        if not np.allclose(R.T @ R, np.eye(3), atol=_ORTHO_TOL, rtol=0.0):
            raise ValueError("R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise ValueError("R is not a proper rotation (det != 1)")

    @staticmethod
    def identity() -> "CameraExtrinsics":
        return CameraExtrinsics(np.eye(3), np.zeros(3))

    @staticmethod
    def look_at(position, target, up=(0.0, 0.0, 1.0)) -> "CameraExtrinsics":
        """Build extrinsics for a camera at ``position`` whose optical axis
        points at ``target``, with ``up`` fixing the roll."""
        p = np.asarray(position, dtype=float)
        z = np.asarray(target, dtype=float) - p
        nz = np.linalg.norm(z)
        if nz == 0:
            raise ValueError("camera position and look-at target coincide")
        z = z / nz
        x = np.cross(z, np.asarray(up, dtype=float))
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            raise ValueError("up vector is parallel to the viewing direction")
        x = x / nx
        y = np.cross(z, x)
        R = np.stack([x, y, z])  # rows are camera axes in world coords
        return CameraExtrinsics(R, -R @ p)

    def camera_center(self) -> np.ndarray:
        """Camera optical center in world coordinates."""
        return -self.R.T @ self.t


@dataclass(frozen=True)
class PixelPoint:
    u: float
    v: float


@dataclass(frozen=True)
class CameraPoint:
    xc: float
    yc: float
    zc: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xc, self.yc, self.zc])


@dataclass(frozen=True)
class WorldPoint:
    xw: float
    yw: float
    zw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.xw, self.yw, self.zw])


@dataclass(frozen=True)
class PlanarCorrespondence:
    """World point on the plane zw = 0 paired with its observed pixel."""

    world: WorldPoint
    pixel: PixelPoint

    def __post_init__(self):
        if self.world.zw != 0.0:
            raise ValueError("planar correspondence requires zw == 0")


@dataclass(frozen=True)
class CameraModel:
    """Intrinsics plus mounting pose; the full world->pixel map."""

    intrinsics: CameraIntrinsics
    extrinsics: CameraExtrinsics

    def project(self, w: WorldPoint) -> PixelPoint:
        return camera_to_pixel(self.intrinsics, world_to_camera(self.extrinsics, w))


def camera_to_pixel(k: CameraIntrinsics, p: CameraPoint) -> PixelPoint:
    """Project a camera-frame point to pixels (homogeneous division by zc)."""
    if p.zc <= 0:
        raise NonPositiveDepth(f"point depth {p.zc} is not positive")
    return PixelPoint(k.fx * p.xc / p.zc + k.cx, k.fy * p.yc / p.zc + k.cy)


def pixel_to_camera_ray(k: CameraIntrinsics, px: PixelPoint) -> np.ndarray:
    """Unit ray direction in the camera frame through the given pixel.

    Satisfies camera_to_pixel(k, s * d) == px for all s > 0, with d[2] > 0.
    """
    d = np.array([(px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0])
    return d / np.linalg.norm(d)


def world_to_camera(e: CameraExtrinsics, w: WorldPoint) -> CameraPoint:
    c = e.R @ w.as_array() + e.t
    return CameraPoint(*c)


def camera_to_world(e: CameraExtrinsics, c: CameraPoint) -> WorldPoint:
    w = e.R.T @ (c.as_array() - e.t)
    return WorldPoint(*w)


def backproject_to_plane(
    k: CameraIntrinsics,
    e: CameraExtrinsics,
    px: PixelPoint,
    plane_height: float,
) -> WorldPoint:
    """Intersect the pixel's viewing ray with the world plane zw = plane_height."""
    d_cam = pixel_to_camera_ray(k, px)
    d_world = e.R.T @ d_cam
    origin = e.camera_center()
    if abs(d_world[2]) < 1e-12:
        raise RayParallelToPlane(f"ray is parallel to plane z={plane_height}")
    s = (plane_height - origin[2]) / d_world[2]
    if s <= 0:
        raise PlaneBehindCamera(f"plane z={plane_height} is behind the camera")
    return WorldPoint(*(origin + s * d_world))


def _normalization(points: np.ndarray) -> np.ndarray:
    """Similarity transform moving the centroid to the origin and the RMS
    distance to sqrt(2) (standard DLT conditioning)."""
    centroid = points.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((points - centroid) ** 2, axis=1)))
    scale = math.sqrt(2.0) / rms if rms > 0 else 1.0
    T = np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )
    return T


def _apply_h(h: np.ndarray, xy: np.ndarray) -> np.ndarray:
    q = h @ np.array([xy[0], xy[1], 1.0])
    return q[:2] / q[2]


def estimate_homography(
    correspondences: list[PlanarCorrespondence],
) -> tuple[np.ndarray, float]:
    """DLT estimate of the plane->image homography.

    Returns (H, mean symmetric reprojection error).  H maps (xw, yw, 1) to
    (u, v, 1) up to scale and is normalized so H[2, 2] == 1 when nonzero.
    """
    if len(correspondences) < 4:
        raise DegenerateConfiguration("need at least 4 correspondences")
    world = np.array([[c.world.xw, c.world.yw] for c in correspondences])
    pix = np.array([[c.pixel.u, c.pixel.v] for c in correspondences])

    Tw = _normalization(world)
    Tp = _normalization(pix)
    wn = (Tw @ np.column_stack([world, np.ones(len(world))]).T).T[:, :2]
    pn = (Tp @ np.column_stack([pix, np.ones(len(pix))]).T).T[:, :2]

    rows = []
    for (x, y), (u, v) in zip(wn, pn):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    A = np.array(rows)
    _, s, vt = np.linalg.svd(A)
    # A rank deficiency beyond the single homography nullspace means the
    # configuration does not pin down H (e.g. collinear world points).
    if s[-2] < 1e-6 * s[0]:
        raise DegenerateConfiguration("design matrix is rank-deficient")
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Tp) @ Hn @ Tw
    if abs(H[2, 2]) > 1e-12:
        H = H / H[2, 2]

    Hinv = np.linalg.inv(H)
    err = 0.0
    for w, p in zip(world, pix):
        err += np.linalg.norm(_apply_h(H, w) - p)
        err += np.linalg.norm(_apply_h(Hinv, p) - w)
    return H, err / (2 * len(correspondences))


def pose_from_homography(k: CameraIntrinsics, h: np.ndarray) -> CameraExtrinsics:
    """Recover the camera pose from a plane(z=0)->image homography.

    Decomposition: H ~ K [r1 r2 t] for points (x, y, 0).  The scale is fixed
    by the unit length of the rotation columns; the sign is chosen so the
    plane origin sits in front of the camera.  The rotation is re-orthonormalized
    by orthogonal Procrustes.
    """
    h = np.asarray(h, dtype=float).reshape(3, 3)
    if np.linalg.matrix_rank(h, tol=1e-12) < 3:
        raise SingularHomography("homography is singular")
    B = np.linalg.inv(k.matrix()) @ h
    lam = 2.0 / (np.linalg.norm(B[:, 0]) + np.linalg.norm(B[:, 1]))
    B = lam * B
    if B[2, 2] <= 0:  # plane origin must have positive camera depth
        B = -B
    r1, r2, t = B[:, 0], B[:, 1], B[:, 2]
    M = np.column_stack([r1, r2, np.cross(r1, r2)])
    U, _, Vt = np.linalg.svd(M)
    R = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
    return CameraExtrinsics(R, t)
