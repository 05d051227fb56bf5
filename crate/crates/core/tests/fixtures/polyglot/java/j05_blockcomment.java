/*
import ghost.Inside;
import another.Phantom;
*/
import org.slf4j.Logger;

public class j05_blockcomment {}
