"""Deterministic synthetic PGN corpora for tests (no real games needed)."""

import random

from chessbench import core
from chessbench.notation import Result, format_pgn, game_from_moves
from chessbench.taskgen import gen_random_game, mating_moves

COMMENTS = [
    "A solid developing move.",
    "Controls the centre. [%clk 0:04:51]",
    "Too ambitious, the queen gets exposed.",
    "[%eval 0.35] Keeps the balance.",
    "White prepares a kingside attack 👍",
    "The pawn structure is now fixed.",
    "Hard to find a better square for this piece.",
    "[%cal Ge2e4] Opening the diagonal.",
    "A typical plan in these positions.",
    "Black should have castled first.",
]

ELO_POOL = [800, 950, 1100, 1300, 1500, 1700, 1900, 2100, 2300, 2600]


def random_moves(seed, max_plies):
    g = gen_random_game(seed, max_plies)
    return [tm.move for tm in g.moves]


def mating_game(seed, max_plies=80):
    """Random game truncated so it ends with a checkmate, or None."""
    rng = random.Random(f"mate:{seed}")
    moves = random_moves(f"mate-game:{seed}", max_plies)
    p = core.startpos()
    for i, m in enumerate(moves):
        mates = mating_moves(p)
        if mates and i > 4:
            return moves[:i] + [rng.choice(mates)]
        p = core.apply(p, m)
    return None


def build_games(n_games=40, seed=0, annotate_every=3):
    rng = random.Random(f"corpus:{seed}")
    games = []
    k = 0
    mate_seed = 0
    while len(games) < n_games:
        if k % 4 == 0:
            moves = None
            while moves is None:
                moves = mating_game(f"{seed}:{mate_seed}")
                mate_seed += 1
        else:
            moves = random_moves(f"{seed}:{k}", rng.randint(12, 110))
        white, black = rng.choice(ELO_POOL) + rng.randint(0, 90), rng.choice(ELO_POOL) + rng.randint(0, 90)
        p = core.startpos()
        for m in moves:
            p = core.apply(p, m)
        o = core.outcome(p)
        result = Result.UNKNOWN
        if o.status == core.Status.CHECKMATE:
            result = Result.WHITE_WIN if o.winner == core.WHITE else Result.BLACK_WIN
        headers = [
            ("Event", f"Test game {k}"),
            ("Site", "?"),
            ("White", f"w{k}"),
            ("Black", f"b{k}"),
            ("Result", result.value),
            ("WhiteElo", str(white)),
            ("BlackElo", str(black)),
        ]
        g = game_from_moves(moves, headers=headers, result=result)
        if annotate_every and k % annotate_every == 0:
            for tm in g.moves:
                if rng.random() < 0.3:
                    tm.comments.append(rng.choice(COMMENTS))
        games.append(g)
        k += 1
    return games


def build_corpus_text(n_games=40, seed=0, annotate_every=3):
    return "\n".join(format_pgn(g) for g in build_games(n_games, seed, annotate_every))
