import pytest

from parley.engine import Engine, EngineConfig, default_config_path


@pytest.fixture(scope="session")
def engine_config() -> EngineConfig:
    return EngineConfig.load(default_config_path())


@pytest.fixture(scope="session")
def engine(engine_config) -> Engine:
    return Engine(engine_config)


@pytest.fixture(scope="session")
def kb(engine):
    return engine.kb


@pytest.fixture(scope="session")
def index(engine):
    return engine.index


@pytest.fixture(scope="session")
def fixtures_bundle(engine):
    return engine.fixtures


def drive(engine: Engine, lines: list[str]) -> tuple[str, list[str]]:
    """Run one session over scripted user lines, returning (id, replies)."""
    session_id, _ = engine.create_session()
    replies = []
    for line in lines:
        reply, _ = engine.post_user_turn(session_id, line)
        replies.append(reply)
    return session_id, replies
