"""Mappings of sampled planar domains into Euclidean targets.

A :class:`MappingModel` stores the image of every sample id (``nan`` where
the map is undefined) and optionally a density ``alpha`` per id.  Images
live in ``R^m`` with the Euclidean metric.
"""

from __future__ import annotations

import numpy as np

from .errors import GeometryError

MAPS = ("constant", "identity", "square-z", "angle", "oscillate", "radial-log")


class MappingModel:
    def __init__(self, name, values, density=None, params=None):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        self.name = name
        self.values = values
        self.values.setflags(write=False)
        self.density = None if density is None else np.asarray(density, dtype=float)
        if self.density is not None:
            if np.any(self.density < 0) or not np.all(np.isfinite(self.density)):
                raise GeometryError("bad-parameter", "density must be finite and nonnegative")
            self.density.setflags(write=False)
        self.params = dict(params or {})

    @property
    def target_dim(self):
        return self.values.shape[1]

    def __call__(self, ids):
        return self.values[np.asarray(ids, dtype=np.int64)]

    def dist(self, a, b):
        """Target distance between the images of ids ``a`` and ``b`` (arrays)."""
        return np.sqrt(np.sum((self(a) - self(b)) ** 2, axis=-1))

    def to_dict(self):
        return {"name": self.name, "params": self.params, "target_dim": self.target_dim}


def _complex(domain):
    c = domain.space.coords
    if c is None or c.shape[1] != 2:
        raise GeometryError("no-coordinates", "planar maps need 2-d coordinates")
    return c[:, 0] + 1j * c[:, 1]


def _as_pairs(z):
    return np.stack([z.real, z.imag], axis=1)


def _clearance_all(domain):
    return domain.clearance_of(np.arange(domain.space.n))


def constant(domain, value=0.0):
    n = domain.space.n
    return MappingModel("constant", np.full((n, 2), float(value)), np.zeros(n), {"value": value})


def identity(domain):
    z = _complex(domain)
    return MappingModel("identity", _as_pairs(z), np.ones(len(z)))


def square_z(domain):
    z = _complex(domain)
    return MappingModel("square-z", _as_pairs(z * z), 4 * np.abs(z) ** 2)


def angle(domain):
    """Normalised argument ``theta / 2 pi`` with ``theta`` in ``[0, 2 pi)``."""
    z = _complex(domain)
    theta = np.mod(np.angle(z), 2 * np.pi)
    return MappingModel("angle", theta / (2 * np.pi), None)


def oscillate(domain, omega=20.0):
    """``sin(omega * log log(e^2 / d_b(x)))``; undefined on boundary samples."""
    d = _clearance_all(domain)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.sin(omega * np.log(np.log(np.e**2 / d)))
    v[d <= 0] = np.nan
    return MappingModel("oscillate", v, None, {"omega": omega})


def radial_log(domain):
    """``z/|z| (1 + log(1/|z|))^-1`` with density equal to its Jacobian.

    The Jacobian ``1 / (r^2 (1 + log 1/r)^3)`` is clipped at ``r = eps/2``
    so the sampled density stays finite.
    """
    z = _complex(domain)
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 1.0 / (1.0 + np.log(1.0 / r))
        w = np.where(r > 0, z / r * g, 0.0)
    rc = np.maximum(r, domain.epsilon / 2)
    dens = 1.0 / (rc**2 * (1.0 + np.log(1.0 / rc)) ** 3)
    return MappingModel("radial-log", _as_pairs(w), dens)


def make_map(name, domain, **params):
    table = {
        "constant": constant,
        "identity": identity,
        "square-z": square_z,
        "angle": angle,
        "oscillate": oscillate,
        "radial-log": radial_log,
    }
    if name not in table:
        raise GeometryError("unknown-map", name)
    return table[name](domain, **params)
