"""Zero-sum vaccination game on a coupled transport PDE / infection ODE system.

The susceptible density S(t, xi) over vaccination leaning xi in [0, 1] is
transported by a control-dependent flux g and depleted by vaccination f and
infection alpha(I); the infected population I follows a scalar ODE driven by
the integral of S.  Player 1 (u1) minimises a discounted cost, player 2 (u2)
maximises it.
"""

from .characteristics import ControlSignal, SampledPath
from .config import load_scenario, scenario_from_text
from .coupled import PicardReport, Trajectory, contraction_window, solve
from .cost import CostResult, functional, horizon_for_tolerance, running_cost, tail_bound
from .errors import ConfigurationError, DomainError, NonConvergenceError
from .game import (ControlLattice, Costate, GameConfig, GameResult, best_response_u1, best_response_u2,
                   enumerate_value, lower_hamiltonian, lower_value, pre_hamiltonian, upper_hamiltonian,
                   upper_value)
from .model import (AffineTriple, Holling, Identity, Linear, Power, RegularizedVax, Scenario, Smoothstep,
                    ZeroFlux, validate_scenario)
from .transport import ScalarField, solve_pde

__version__ = "0.1.0"
