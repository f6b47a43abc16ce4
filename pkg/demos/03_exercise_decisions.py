"""
Exercise decisions as a classification problem
===============================================

Every in-the-money regression row records the decision taken and whether,
with hindsight, exercising beat that path's own future cash flow. Grading the
engine's exercise score against the hindsight labels shows how little a single
path's luck can be read off its current state: both rules below sit near an
AUC of one half, which is why the engine regresses across paths instead of
trusting any one of them.
"""

import numpy as np

from lsm_ml import ExerciseStyle, LsmConfig, ModelParams, OptionKind, OptionSpec, price_american_lsm
from lsm_ml.lsm import exercise_dataset
from lsm_ml.metrics import classification_report

put = OptionSpec(OptionKind.PUT, ExerciseStyle.AMERICAN, 100.0, 1.0)
market = ModelParams.single(100.0, 0.04, 0.2)

res, decisions = price_american_lsm(put, market, LsmConfig(n_paths=20_000, n_steps=25, record_decisions=True))
print("price", round(res.price, 4), "from", len(decisions), "decision rows")

# graded against the decision it took, the engine's score is perfect by construction;
# the informative target is the hindsight label
rep = classification_report(decisions.realized, decisions.score, threshold=0.5)
print("engine score   auc", round(rep.roc_auc, 4), "pr-auc", round(rep.pr_auc, 4), "f1", round(rep.f1, 4))

# a naive rule for comparison: the deeper in the money, the likelier exercise pays
X, _ = exercise_dataset(decisions)
moneyness = np.clip(4 * (100.0 - X[:, 0]) / 100.0, 0, 1)
naive = classification_report(decisions.realized, moneyness, threshold=0.5)
print("moneyness rule auc", round(naive.roc_auc, 4), "pr-auc", round(naive.pr_auc, 4), "f1", round(naive.f1, 4))
