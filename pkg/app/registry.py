from app.commands import cmd_prox_check, cmd_prune, cmd_report, cmd_sweep, cmd_train
from app.schemas import CommandEntry, ProxCheckInput, PruneInput, ReportInput, SweepInput, TrainInput


COMMAND_REGISTRY: dict[str, CommandEntry] = {

    # ---------- TRAINING ----------

    "train": {
        "schema": TrainInput,
        "handler": cmd_train,
        "description": "Train with proximal group-sparsity regularization",
    },

    "sweep": {
        "schema": SweepInput,
        "handler": cmd_sweep,
        "description": "Lambda sensitivity sweep (fails if validation accuracy std > 2 points)",
    },

    # ---------- PRUNING ----------

    "prune": {
        "schema": PruneInput,
        "handler": cmd_prune,
        "description": "Remove dead neurons and verify output equivalence",
    },

    "report": {
        "schema": ReportInput,
        "handler": cmd_report,
        "description": "Sparsity report for a regularized / compacted checkpoint pair",
    },

    # ---------- VERIFICATION ----------

    "prox-check": {
        "schema": ProxCheckInput,
        "handler": cmd_prox_check,
        "description": "Closed-form proximal operator vs numerical minimizer",
    },
}
