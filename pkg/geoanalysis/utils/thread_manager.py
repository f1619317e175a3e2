import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


class ThreadManager:
    def __init__(self, max_workers=4):
        """
        Initialize the ThreadManager with a configurable number of workers.

        :param max_workers: Maximum number of threads to use in the pool.
        """
        self.max_workers = max(1, int(max_workers))

    def execute(self, tasks):
        """
        Execute a list of tasks using a ThreadPoolExecutor.

        :param tasks: List of tuples where each tuple contains:
                      (function, args) or (function, args, kwargs)
        :return: List of results in submission order. Failed tasks are
                 recorded as error dictionaries, logged, and the first
                 failure is re-raised once every task has finished.
        """
        if self.max_workers == 1 or len(tasks) <= 1:
            futures = None
            outcomes = [self._run_inline(task) for task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                futures = [
                    executor.submit(task[0], *task[1], **task[2]) if len(task) > 2
                    else executor.submit(task[0], *task[1]) for task in tasks
                ]
                outcomes = [self._collect(future) for future in futures]

        results, errors = [], []
        for index, (value, exc) in enumerate(outcomes):
            if exc is not None:
                errors.append({
                    "task": index,
                    "error": str(exc),
                    "details": "Failed to process task.",
                    "exception": exc,
                })
                results.append(None)
            else:
                results.append(value)

        for error in errors:
            logger.error("task %s failed: %s", error["task"], error["error"])
        if errors:
            raise errors[0]["exception"]
        return results

    def map(self, fn, items, **kwargs):
        """Ordered parallel map of ``fn`` over ``items``."""
        return self.execute([(fn, (item,), kwargs) for item in items])

    @staticmethod
    def _run_inline(task):
        try:
            if len(task) > 2:
                return task[0](*task[1], **task[2]), None
            return task[0](*task[1]), None
        except Exception as exc:
            return None, exc

    @staticmethod
    def _collect(future):
        try:
            return future.result(), None
        except Exception as exc:
            return None, exc
