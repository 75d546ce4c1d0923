import logging
import os
from typing import Dict

import aiofiles

from config import config


class ResultWriter:
    def __init__(self, output_dir: str = None):
        """Initialize the writer and create the output directory"""
        self.output_dir = output_dir or config.OUTPUT_DIR
        self.logger = logging.getLogger(__name__)
        os.makedirs(self.output_dir, exist_ok=True)

    async def write_text(self, relative_path: str, content: str) -> dict:
        """Write one file atomically: temporary sibling, then rename"""
        path = os.path.join(self.output_dir, relative_path)
        temp_path = f"{path}.tmp"
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            async with aiofiles.open(temp_path, "w", encoding="utf-8", newline="\n") as handle:
                await handle.write(content)
            os.replace(temp_path, path)
            return {"success": True, "path": path, "size": len(content.encode("utf-8"))}
        except Exception as e:
            self.logger.error(f"Write error for {path}: {e}")
            if os.path.exists(temp_path):
                os.remove(temp_path)
            return {"success": False, "path": path, "error": str(e)}

    async def write_all(self, files: Dict[str, str]) -> dict:
        """Write a batch of files in sorted name order"""
        written, failed = [], []
        for name in sorted(files):
            result = await self.write_text(name, files[name])
            (written if result["success"] else failed).append(result["path"])
        if failed:
            self.logger.error(f"❌ {len(failed)} result files could not be written")
        else:
            self.logger.info(f"✅ Wrote {len(written)} files to {self.output_dir}")
        return {"success": not failed, "written": written, "failed": failed}
