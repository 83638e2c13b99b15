"""
Parallel execution engine for independent training seeds

Seeds share no mutable state, so each one runs in its own process.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed

from tqdm import tqdm

from pyprbgan.core.config import get_settings

logger = logging.getLogger(__name__)


class ParallelSeedRunner:
    """
    Runs one task per seed in a process pool

    A failing task is logged and recorded as {'success': False, ...}; the
    remaining tasks continue.

    Attributes:
        n_workers: Number of parallel workers
        show_progress: Whether to show a progress bar
    """

    def __init__(
        self,
        n_workers: Optional[int] = None,
        show_progress: Optional[bool] = None
    ):
        """
        Initialize parallel runner

        Args:
            n_workers: Number of parallel workers (None = Settings.max_workers,
                which honours PRBGAN_THREADS)
            show_progress: Whether to show a progress bar (None = Settings)
        """
        settings = get_settings()
        self.n_workers = max(1, n_workers if n_workers is not None else settings.max_workers)
        self.show_progress = settings.show_progress if show_progress is None else show_progress

        logger.info(f"Initialized ParallelSeedRunner with {self.n_workers} workers")

    def run_parallel(
        self,
        fn: Callable[..., Dict[str, Any]],
        tasks: Sequence[Tuple[Any, ...]],
        callback: Optional[Callable[[int, Dict[str, Any]], None]] = None
    ) -> List[Dict[str, Any]]:
        """
        Call fn(*task) for every task

        fn must be a module-level function so it can be sent to worker
        processes. With one worker everything runs in this process.

        Args:
            fn: Task function returning a result dictionary
            tasks: Argument tuples, one per seed
            callback: Optional callback(index, result) after each completion

        Returns:
            Result dictionaries in task order
        """
        n_tasks = len(tasks)
        n_workers = min(self.n_workers, n_tasks) if n_tasks else 1
        logger.info(f"Starting {n_tasks} seed runs with {n_workers} workers")

        start_time = time.time()
        results: List[Optional[Dict[str, Any]]] = [None] * n_tasks
        pbar = tqdm(total=n_tasks, desc="Seeds", unit="seed") if self.show_progress else None

        def finish(index: int, result: Dict[str, Any]) -> None:
            results[index] = result
            if callback is not None:
                callback(index, result)
            if pbar is not None:
                pbar.update(1)
                n_success = sum(1 for r in results if r and r.get("success"))
                pbar.set_postfix({"success": f"{n_success}/{pbar.n}"})

        if n_workers == 1:
            for index, args in enumerate(tasks):
                finish(index, self._run_single(fn, index, args))
        else:
            with ProcessPoolExecutor(max_workers=n_workers) as executor:
                future_to_index = {
                    executor.submit(fn, *args): index for index, args in enumerate(tasks)
                }
                for future in as_completed(future_to_index):
                    index = future_to_index[future]
                    try:
                        result = future.result()
                    except Exception as e:
                        logger.error(f"Task {index} failed: {e}")
                        result = {"success": False, "task": index, "error": str(e)}
                    finish(index, result)

        if pbar is not None:
            pbar.close()

        duration = time.time() - start_time
        n_success = sum(1 for r in results if r and r.get("success"))
        logger.info(
            f"Parallel execution completed: "
            f"{n_success}/{n_tasks} successful, "
            f"Duration: {duration:.2f}s"
        )
        return [r if r is not None else {"success": False, "task": i, "error": "no result"}
                for i, r in enumerate(results)]

    @staticmethod
    def _run_single(fn: Callable[..., Dict[str, Any]], index: int, args: Tuple[Any, ...]) -> Dict[str, Any]:
        try:
            return fn(*args)
        except Exception as e:
            logger.error(f"Error in task {index}: {e}")
            return {"success": False, "task": index, "error": str(e)}

    def __repr__(self) -> str:
        return f"ParallelSeedRunner(n_workers={self.n_workers})"
