__all__ = ["FloatArray", "IndexArray", "Json", "Triple"]

from typing import Any, Dict, Tuple

import numpy as np
import numpy.typing as npt

Json = Dict[str, Any]
FloatArray = npt.NDArray[np.float64]
IndexArray = npt.NDArray[np.int64]
Triple = Tuple[float, float, float]
