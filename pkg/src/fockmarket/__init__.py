"""Trading models on truncated bosonic Fock spaces.

Closed and open single-share markets whose traders, cash, supply and price
are bosonic modes; exact sparse-operator dynamics plus the mean-field and
long-time approximations, and a first-iterate portfolio solver.
"""

from .fock import (CapacityError, FockSpace, MatrixOperator, NumberState,
                   SpaceMismatchError, build_space, commutator, expectation,
                   identity, ladder, matrix_element, number_op, zero_operator)
from .priceladder import (SaturationWarning, cash_power_op, factorial_weight,
                          log_factorial_weight)
from .models import (MarketModel, ModelParams, build_effective_L,
                     build_open_market, build_two_trader, conserved_operators,
                     default_cutoffs, effective_labels, interior_margins,
                     open_market_labels, sector_exact, two_trader_labels)
from .dynamics import (MarginError, SeriesCoefficients, TimeSeries,
                       eigensystem, evolve_expectation, heisenberg_series,
                       portfolio_operator, price_supply_closed_form)
from .meanfield import (DegenerateParametersError, MeanFieldParams,
                        integrate_meanfield_ode, meanfield_n,
                        meanfield_portfolio, x_algebra, x_operator)
from .stochastic import (EpsilonProfile, GammaCoefficients,
                         StationarityVerdict, epsilon_profiles,
                         gamma_real_parts, generator_apply, second_order_term,
                         stationarity_verdict, system_space)
from .fpl import (FplParams, FplTrajectory, eta_functions,
                  eta_functions_simpson, omega_coefficients, phase_coefficients,
                  phases, price_mean, r_of_t, trajectory, zeroth_order_check)

__version__ = "0.1.0"
