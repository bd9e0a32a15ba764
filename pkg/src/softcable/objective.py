"""Depth-image task losses: distance image, grip, avoid, and their combination.

The distance image clamps robot-minus-object depth at zero, so penetration
contributes nothing.  Grip is the mean distance over views, frames, and
pixels (the pixel mean keeps the loss scale resolution-independent); avoid is
its negation; a multi-object task mixes a grip target with averaged obstacle
avoidance through the weight alpha.
"""

from __future__ import annotations

import numpy as np


def distance_image(robot_img: np.ndarray, object_img: np.ndarray) -> np.ndarray:
    """Elementwise max(robot depth - object depth, 0)."""
    robot_img = np.asarray(robot_img, dtype=np.float64)
    object_img = np.asarray(object_img, dtype=np.float64)
    if robot_img.shape != object_img.shape:
        raise ValueError(
            f"resolution mismatch: robot {robot_img.shape} vs object {object_img.shape}"
        )
    return np.maximum(robot_img - object_img, 0.0)


def grip_loss(robot_imgs, object_imgs) -> float:
    """Mean distance-image pixel value over all (view, frame) image pairs, >= 0.

    ``robot_imgs`` and ``object_imgs`` are equal-length sequences covering
    every view/frame combination.
    """
    robot_imgs, object_imgs = list(robot_imgs), list(object_imgs)
    if not robot_imgs or len(robot_imgs) != len(object_imgs):
        raise ValueError("need one object image per robot image, at least one pair")
    total = 0.0
    for r, s in zip(robot_imgs, object_imgs):
        total += float(distance_image(r, s).mean())
    return total / len(robot_imgs)


def avoid_loss(robot_imgs, obstacle_imgs) -> float:
    """Negated grip loss against an obstacle, <= 0."""
    return -grip_loss(robot_imgs, obstacle_imgs)


def combined_loss(
    alpha: float,
    grip_pair=None,
    avoid_pairs=(),
) -> float:
    """alpha * grip + (1 - alpha)/|Q| * sum of per-obstacle avoid losses.

    ``grip_pair`` is (robot_imgs, target_imgs); ``avoid_pairs`` a sequence of
    (robot_imgs, obstacle_imgs), one per obstacle.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    avoid_pairs = list(avoid_pairs)
    if grip_pair is None and not avoid_pairs:
        raise ValueError("task needs a target or at least one obstacle")
    if not avoid_pairs:
        if alpha < 1.0:
            raise ValueError("alpha < 1 requires at least one obstacle")
        return grip_loss(*grip_pair)
    if grip_pair is None:
        if alpha > 0.0:
            raise ValueError("alpha > 0 requires a grip target")
        return avoid_loss(*avoid_pairs[0]) if len(avoid_pairs) == 1 else (
            sum(avoid_loss(r, q) for r, q in avoid_pairs) / len(avoid_pairs)
        )
    return alpha * grip_loss(*grip_pair) + (1.0 - alpha) / len(avoid_pairs) * sum(
        avoid_loss(r, q) for r, q in avoid_pairs
    )


def grip_loss_pixel_grad(robot_img, object_img, num_images: int) -> np.ndarray:
    """d(grip)/d(robot pixel) for one image of a ``num_images`` average.

    The max(., 0) kink passes the subgradient 0, so pixels at or below the
    object depth contribute nothing.
    """
    mask = (np.asarray(robot_img) - np.asarray(object_img)) > 0.0
    return mask / (num_images * robot_img.size)
