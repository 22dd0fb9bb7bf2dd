"""Package marker for unittest test discovery."""
