"""Quick end-to-end check of the spdnn extension module."""
import math
import tempfile

import spdnn

traj = spdnn.simulate("DGP1", 200, seed=7)
assert len(traj) == 200 and traj.feature_dim >= 1
again = spdnn.simulate("DGP1", 200, seed=7)
assert traj.targets == again.targets

theta = [0.0, 0.05, -2.0, 1e-8]
assert spdnn.l0_norm(theta) == 3
assert spdnn.effective_l0(theta) == 2
assert math.isclose(spdnn.penalty_value(theta, 1.0, 0.1), 0.5 + 1.0 + 1e-7)
assert spdnn.penalty_subgradient([0.05, 0.0, 2.0], 1.0, 0.1) == [10.0, 0.0, 0.0]

net, history = spdnn.train(traj, lam=1e-4, tau=0.1, seed=1, hidden=[8], max_epochs=20)
assert history and {"epoch", "train_loss", "penalty_value", "best"} <= set(history[0])
preds = net.predict(traj.features[:5])
assert len(preds) == 5 and all(math.isfinite(p) for p in preds)
loss, grad = net.loss_and_gradient(traj.features[:5], traj.targets[:5])
assert len(grad) == net.param_count and math.isclose(loss, net.mean_loss(traj.features[:5], traj.targets[:5]))
assert spdnn.Network.from_text(net.to_text()) == net

test = spdnn.simulate("DGP1", 500, seed=8)
print("L2 error:", spdnn.evaluate_l2(net, test))
cls = spdnn.simulate("DGP3", 300, seed=9)
print("excess risk of zero net:", spdnn.evaluate_excess_risk(spdnn.Network(cls.feature_dim, [4]), cls))

with tempfile.TemporaryDirectory() as d:
    records = spdnn.replicate("DGP1", 120, reps=1, grid_i=[3], grid_j=[3], hidden=[4],
                              max_epochs=5, test_size=200, out_dir=d)
    assert sorted(r["method"] for r in records) == ["NPDNN", "SPDNN"]

print("schedule:", spdnn.schedule(1000.0))
print("rate:", spdnn.rate(1000.0))
try:
    spdnn.simulate("DGP9", 10)
except ValueError:
    pass
else:
    raise AssertionError("bad dgp accepted")
print("smoke test passed")
