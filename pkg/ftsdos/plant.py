"""
Module containing plant models, their nominal feedback laws and the built-in plant registry.
"""
import logging
import math

import numpy as np

from ftsdos.util import SimpleEnum
from ftsdos.classk import PowerLaw
from ftsdos.certificates import LyapunovCertificate

logger = logging.getLogger(__name__)

HoldStrategy = SimpleEnum.enum("HoldStrategy", ["hold_last", "zero_input"])


class PlantModel:
    """
    Continuous-time plant dx/dt = f(x, u, t) with nominal state feedback u = ψ(x).

    The origin must be an equilibrium of the nominal closed loop: f(0, ψ(0), t) = 0.
    """
    __slots__ = ["name", "state_dim", "input_dim", "_dynamics", "_feedback"]

    def __init__(self, name, state_dim, input_dim, dynamics, feedback):
        """
        Create a plant model.

        :param name: Name used in logs and result documents
        :param state_dim: Dimension n of the state
        :param input_dim: Dimension m of the input
        :param dynamics: Callable f(x, u, t) returning an array of shape (n,)
        :param feedback: Callable ψ(x) returning an array of shape (m,)
        """
        if int(state_dim) < 1 or int(input_dim) < 1:
            raise ValueError("Plant dimensions must be positive")
        self.name = name
        self.state_dim = int(state_dim)
        self.input_dim = int(input_dim)
        self._dynamics = dynamics
        self._feedback = feedback

        zero = np.zeros(self.state_dim)
        u0 = self.feedback(zero)
        if u0.shape != (self.input_dim,):
            raise ValueError("Feedback of plant {0} returns shape {1}, expected ({2},)".format(
                name, u0.shape, self.input_dim))
        f0 = self.dynamics(zero, u0, 0.)
        if f0.shape != (self.state_dim,):
            raise ValueError("Dynamics of plant {0} return shape {1}, expected ({2},)".format(
                name, f0.shape, self.state_dim))
        if np.any(np.abs(f0) > 1e-12):
            raise ValueError("Origin is not an equilibrium of plant {0} under its feedback".format(name))

    def __repr__(self):
        return "<PlantModel: {0} n={1} m={2}>".format(self.name, self.state_dim, self.input_dim)

    def dynamics(self, x, u, t=0.):
        return np.asarray(self._dynamics(x, u, t), dtype=float)

    def feedback(self, x):
        return np.asarray(self._feedback(x), dtype=float).reshape(-1)

    def closed_loop(self, x, t=0.):
        """
        Right hand side under continuous feedback, f(x, ψ(x), t).
        """
        return self.dynamics(x, self.feedback(x), t)


def held_input(model, strategy, last_sample):
    """
    Input applied while transmissions are denied.

    :param model: PlantModel
    :param strategy: HoldStrategy item
    :param last_sample: State at the last successful transmission, or None if there has been none
    :return: Input vector
    """
    if strategy == HoldStrategy.zero_input or last_sample is None:
        return np.zeros(model.input_dim)
    if strategy == HoldStrategy.hold_last:
        return model.feedback(last_sample)
    raise ValueError("Unknown hold strategy {0}".format(strategy))


def _sqrt_decay(x, u, t):
    return -np.sign(x) * np.sqrt(np.abs(x)) + x + u


def _double_gain(x):
    return -2. * x


def _example_V(x):
    return np.sum(np.square(x), axis=-1)


def builtin_example(dim=1, lam=0.5, mu=None, domain_radius=3.):
    """
    The scalar finite-time example dx/dt = -sgn(x)|x|^(1/2) + x + u with ψ(x) = -2x,
    replicated over dim decoupled components.

    Certificate: V = ‖x‖², α₁(r) = r², α₂(r) = 3r², γ(r) = 2r², c = 2, a = 3/4.
    The gain condition γ(4r) ≤ μ α₁(r)^a reads 32 √r ≤ μ, so the default μ is 32 √R rounded
    up to two decimals, 55.43 on the default domain.

    :param dim: Number of decoupled components
    :param lam: Triggering parameter λ
    :param mu: Gain constant, defaults to the smallest admissible value on the domain rounded up
    :param domain_radius: Radius R of the certificate domain
    :return: (PlantModel, LyapunovCertificate)
    """
    model = PlantModel("example" if dim == 1 else "example{0}d".format(dim), dim, dim,
                       _sqrt_decay, _double_gain)
    if mu is None:
        mu = math.ceil(3200. * math.sqrt(domain_radius)) / 100.
    cert = LyapunovCertificate(V=_example_V, alpha1=PowerLaw(1., 2.), alpha2=PowerLaw(3., 2.),
                               gamma=PowerLaw(2., 2.), c=2., a=0.75, lam=lam, mu=mu,
                               domain_radius=domain_radius, state_dim=dim)
    return model, cert


def _linear_decay(x, u, t):
    return -x + u


def _zero_feedback(x):
    return np.zeros_like(x)


def linear_decay(dim=1, **kwargs):
    """
    The linear plant dx/dt = -x + u with ψ ≡ 0, used to check the integrator against exp(-t).

    :return: (PlantModel, None), no finite-time certificate exists for this plant
    """
    return PlantModel("linear_decay", dim, dim, _linear_decay, _zero_feedback), None


_PLANTS = {
    "example": builtin_example,
    "linear_decay": linear_decay,
}


def register_plant(name, factory):
    """
    Make a plant available by name to scenario files.

    :param name: Plant name
    :param factory: Callable factory(dim, **kwargs) returning (PlantModel, LyapunovCertificate or None)
    """
    if name in _PLANTS:
        logger.warning("Plant {0} redefined".format(name))
    _PLANTS[name] = factory


def get_plant(name, dim=1, **kwargs):
    """
    Build a registered plant.

    :param name: Plant name
    :param dim: State dimension
    :return: (PlantModel, LyapunovCertificate or None)
    """
    try:
        factory = _PLANTS[name]
    except KeyError:
        raise KeyError("Unknown plant '{0}', known plants: {1}".format(name, ", ".join(plant_names())))
    return factory(dim=dim, **kwargs)


def plant_names():
    return sorted(_PLANTS)
