import pytest

from fvkit import datagen, ism, neural, resources, structlearn


@pytest.fixture(scope="session")
def si_tree():
    return resources.si_tree()


@pytest.fixture(scope="session")
def si_reach():
    return ism.reachability(ism.load_ssim(resources.si_ssim_text()))


@pytest.fixture(scope="session")
def si_dataset(si_tree, si_reach):
    spec = datagen.spec_for_tree(si_tree, 316, 42)
    return datagen.generate(si_tree, spec, edges=ism.skeleton(si_reach).edges)


@pytest.fixture(scope="session")
def gcn_ism(si_dataset):
    return neural.train("gcn", si_dataset, neural.TrainConfig(seed=42))


@pytest.fixture(scope="session")
def mlp_ism(si_dataset):
    return neural.train("mlp", si_dataset, neural.TrainConfig(seed=42))


@pytest.fixture(scope="session")
def hill_climb_edges(si_dataset):
    return structlearn.hill_climb(structlearn.discretize(si_dataset), seed=42).dag.edges


@pytest.fixture(scope="session")
def gcn_hill_climb(si_dataset, hill_climb_edges):
    return neural.train("gcn", si_dataset, neural.TrainConfig(seed=42), edges=hill_climb_edges)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
