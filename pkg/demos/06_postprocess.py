"""
Fine-tuning length and exit weights
===================================

Phase one trains on the training split and watches validation accuracy with
a patience of 30 epochs. The best epoch ``e`` is then reused: training
restarts on train plus validation for exactly ``e`` epochs.
"""

import numpy as np

from natsearch.evaluator import CurveTrainer, synthetic_trainer
from natsearch.pipeline import AEPStrategy, aep_weights, postprocess

for seed in range(3):
    tr = synthetic_trainer(seed)
    res = postprocess(None, tr, max_epochs=150, patience=30)
    print(f"seed {seed}: best epoch e={res.e}, phase one stopped after {res.phase1_epochs}, "
          f"test score {res.score:.2f}")

# A network that only gets worse is left untouched.
res = postprocess(None, CurveTrainer([70.0 - 0.1 * t for t in range(151)]))
print("degrading curve:", res.e, res.score)

# Ensemble weights over the exits of a network that leaves at stage 4.
for s in AEPStrategy:
    print(f"{s.value:8s}", np.round(aep_weights(4, s), 3))
