"""Token exchange games: ledgers as evolving weighted graphs whose balances
move by column-stochastic transfer matrices."""

from .engine import (
    GameRun,
    LayerState,
    MintBurnVector,
    Step,
    TransactionLog,
    TransferMatrix,
    commit_sublayer,
    replay_transactions,
    run,
    settle_sublayer,
    step_closed,
    step_open,
    token_supply,
    validate_transfer_matrix,
)
from .errors import TegsimError
from .ledger import Ledger, TokenSet, Verdict, tokenise, validate_token_set
from .metrics import entropy, exchange_identity, inflation_ratio, relative_entropy, zeta
from .multilayer import (
    FungibilityMatrix,
    check_theorem_b,
    cross_layer_swap,
    find_arbitrage,
    fungibility_graph,
)

__version__ = "0.1.0"
