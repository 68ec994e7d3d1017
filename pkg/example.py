"""Example usage of the Gated Grounder."""

from gated_grounder.config import load_run_config
from gated_grounder.errors import GrounderError
from gated_grounder.orchestrator import GroundingOrchestrator


def example():
    """Example of using the orchestrator."""
    config = load_run_config(
        "configs/acceptance.cfg",
        overrides={"output_dir": "runs/example", "optimizer.epochs": 3},
    )
    orchestrator = GroundingOrchestrator(config)

    # Example 1: Parse an expression
    print("Example 1: Parsing an expression")
    print(orchestrator.parse_dump("red box left of blue ball and box above cup"))

    # Example 2: Generate, train and evaluate
    print("\n\nExample 2: Training a small model")
    try:
        orchestrator.generate()
        result = orchestrator.train()
        metrics = orchestrator.evaluate(split="test", model=result["model"])
        print(f"\n✅ Test Acc@0.5: {metrics.acc_at_0_5:.2%} (raw box {metrics.acc_raw_box:.2%})")
    except GrounderError as e:
        print(f"Error: {e}")
        return

    # Example 3: Trace one scene
    print("\n\nExample 3: Tracing the first test scene")
    trace, paths = orchestrator.trace(index=0)
    for step in trace.steps:
        print(f"  step {step.step}: '{step.sub_expression}' active={step.active}")
    print(f"\n✅ Trace tables: {paths['nodes']}, {paths['edges']}")


if __name__ == "__main__":
    example()
