import json
from datetime import datetime, timedelta, timezone

import pytest

from paylens.corpus import Transaction, group_by_user

BASE_TIME = datetime(2024, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def make_txn(txn_id, note="", actor="ua", target="ub", minutes=0,
             kind="payment", likes=0, comments=0, audience="public",
             actor_name=None, target_name=None):
    return Transaction(
        id=txn_id,
        created_at=BASE_TIME + timedelta(minutes=minutes),
        note=note,
        kind=kind,
        actor_id=actor,
        actor_name=actor_name if actor_name is not None else actor.upper(),
        target_id=target,
        target_name=target_name if target_name is not None else target.upper(),
        likes_count=likes,
        comments_count=comments,
        audience=audience,
    )


def txn_json(txn_id, note="", actor="ua", target="ub", minutes=0,
             kind="payment", likes=0, comments=0, audience="public"):
    return json.dumps({
        "id": txn_id,
        "date_created": (BASE_TIME + timedelta(minutes=minutes)).isoformat(),
        "note": note,
        "type": kind,
        "actor": {"id": actor, "name": actor.upper()},
        "target": {"id": target, "name": target.upper()},
        "likes_count": likes,
        "comments_count": comments,
        "audience": audience,
    })


@pytest.fixture
def txn():
    return make_txn


@pytest.fixture
def small_corpus():
    """Three users: ua posts twice, ub twice, uc once (as target)."""
    txns = [
        make_txn("t1", "pizza night", actor="ua", target="ub", minutes=0),
        make_txn("t2", "rent", actor="ub", target="ua", minutes=1),
        make_txn("t3", "🍕", actor="ua", target="uc", minutes=2, kind="charge"),
    ]
    return group_by_user(txns)
