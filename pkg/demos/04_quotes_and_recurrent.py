"""
From quote files to a recurrent bid model
=========================================

Load the bundled synthetic options chain, look at how its numeric columns
move together, then fit a small GRU that predicts the bid from the other
columns.
"""

from pathlib import Path

import numpy as np

import lsm_ml
from lsm_ml.data import correlation_matrix, read_quotes
from lsm_ml.metrics import regression_errors
from lsm_ml.recurrent import NetworkConfig, train

quotes = read_quotes(Path(lsm_ml.__file__).parent / "data" / "sample_quotes.csv")
print(len(quotes), "quotes")

corr = correlation_matrix(quotes, ["strike", "bid", "ask", "delta", "vega", "implied_volatility"])
for name, row in zip(corr.columns, corr.matrix):
    print(f"{name:>18s}", " ".join(f"{v:6.2f}" for v in row))

features = ["strike", "delta", "gamma", "vega", "implied_volatility"]
X, y = quotes.matrix(features), quotes.column("bid")
keep = ~np.isnan(X).any(axis=1)

cfg = NetworkConfig(cell="gru", hidden_sizes=(16,), dense_sizes=(8,), epochs=300, batch_size=16,
                    learning_rate=0.01)
model, history, (_, val) = train(cfg, X[keep], y[keep])
print("train mse: first", round(history.train_mse[0], 3), "last", round(history.train_mse[-1], 3))
mae, mse, rmse = regression_errors(y[keep][val], model.predict(X[keep][val]))
print("validation mae", round(mae, 3), "rmse", round(rmse, 3))
