from momentchain.exceptions import *  # noqa: F401 F403
from momentchain.exact import (  # noqa: F401
    build_truncated,
    check_recurrences,
    mean_var,
    propagate,
)
from momentchain.gbm import (  # noqa: F401
    CoefficientSchedule,
    GbmParams,
    log_return_law,
    simulate_schedule,
)
from momentchain.grid import (  # noqa: F401
    make_explicit,
    make_two_sided,
    make_uniform,
)
from momentchain.heat import HeatParams, embed_points, temperature_profile  # noqa: F401
from momentchain.kernel import (  # noqa: F401
    MomentSpec,
    TransitionKernel,
    check_feasibility,
    transition_probs,
)
from momentchain.simulate import simulate, snapshot  # noqa: F401
from momentchain.stats import (  # noqa: F401
    EmpiricalDistribution,
    NormalLaw,
    normal_quantile,
    wasserstein1,
)
